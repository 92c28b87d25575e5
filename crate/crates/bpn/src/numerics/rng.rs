//! Seeded, stream-addressable randomness.
//!
//! Every random draw in the crate flows through [`RngStream`], a ChaCha8
//! generator addressed by `(seed, stream_id)`. ChaCha output is defined
//! bit-exactly by its key and stream, independent of platform, so the same
//! address always yields the same sequence. Stream ids are composed from a
//! [`StreamDomain`] plus up to two indices (task, layer, ...) so that
//! unrelated consumers never share a stream.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Name recorded in run manifests so results can be tied to the generator.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Logical consumers of randomness. Keeping them on separate streams means
/// e.g. adding a bias-factor draw cannot shift the minibatch shuffle order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    WeightInit = 1,
    FactorInit = 2,
    Shuffle = 3,
    PspKey = 4,
    Fisher = 5,
    Clusters = 6,
    Permutation = 7,
    Data = 8,
}

/// Packs `(domain, a, b)` into a single stream id.
///
/// splitmix64-style finalizer; the mixing only has to keep distinct
/// addresses distinct, which the bijective finalizer guarantees per input
/// word and makes collisions across words vanishingly unlikely.
pub fn stream_id(domain: StreamDomain, a: u64, b: u64) -> u64 {
    let mut z = (domain as u64)
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(a.wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add(b.wrapping_mul(0x94d0_49bb_1331_11eb))
        .wrapping_add(0x2545_f491_4f6c_dd1d);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        RngStream {
            seed,
            stream,
            rng,
            spare_normal: None,
        }
    }

    pub fn for_domain(seed: u64, domain: StreamDomain, a: u64, b: u64) -> Self {
        RngStream::new(seed, stream_id(domain, a, b))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        // u in (0, 1] so the log is finite.
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        let r = (-2.0 * u.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * v;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index in `[0, n)` via the widening-multiply map.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    pub fn sign(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices from `[0, n)` (partial Fisher-Yates), in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// A vector of random +/-1 entries, deterministic in the stream.
pub fn sample_sign_vector<T: Scalar>(n: usize, rng: &mut RngStream) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "sample_sign_vector needs n >= 1".into(),
        ));
    }
    Ok((0..n)
        .map(|_| {
            if rng.sign() > 0 {
                T::one()
            } else {
                -T::one()
            }
        })
        .collect())
}

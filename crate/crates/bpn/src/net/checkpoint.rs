//! Model checkpoint container.
//!
//! Little-endian binary layout:
//!
//! ```text
//! magic          8 bytes  "BPNCKPT1"
//! scalar width   u8       4 (f32) or 8 (f64)
//! n_layers       u32
//! per layer      in_dim u32, out_dim u32, activation u8 (0 relu, 1 softmax, 2 linear)
//! per layer      W row-major (in*out scalars), then b (out scalars)
//! n_bank_entries u32
//! per entry      task_id u64, then per layer out_dim scalars (frozen bias)
//! ```
//!
//! Binary keys are deliberately not stored: they are regenerated from the
//! key-set master seed, so their on-disk cost stays at the seed itself.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Scalar;

use super::types::{Activation, BiasBank, LayerSpec, NetworkState, TaskBias};

const MAGIC: &[u8; 8] = b"BPNCKPT1";

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::SoftmaxOutput => 1,
        Activation::Linear => 2,
    }
}

fn activation_from_tag(t: u8) -> Result<Activation> {
    match t {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::SoftmaxOutput),
        2 => Ok(Activation::Linear),
        other => Err(Error::Format(format!("unknown activation tag {other}"))),
    }
}

/// Serializes a network plus its frozen bias bank.
pub fn checkpoint_bytes<T: Scalar>(net: &NetworkState<T>, bank: &BiasBank<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(T::WIDTH as u8);
    out.extend_from_slice(&(net.n_layers() as u32).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        out.push(activation_tag(l.activation));
    }
    for i in 0..net.n_layers() {
        for &v in net.weight(i).data() {
            v.write_le(&mut out);
        }
        for &v in net.bias(i) {
            v.write_le(&mut out);
        }
    }
    out.extend_from_slice(&(bank.len() as u32).to_le_bytes());
    for (&task_id, bias) in bank.iter() {
        out.extend_from_slice(&(task_id as u64).to_le_bytes());
        for i in 0..bias.n_layers() {
            for &v in bias.layer(i) {
                v.write_le(&mut out);
            }
        }
    }
    out
}

pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    net: &NetworkState<T>,
    bank: &BiasBank<T>,
) -> Result<()> {
    fs::write(path, checkpoint_bytes(net, bank))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(n * T::WIDTH)?;
        Ok(raw.chunks_exact(T::WIDTH).map(T::read_le).collect())
    }
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(NetworkState<T>, BiasBank<T>)> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };

    if r.take(8)? != MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic; expected {:?}",
            std::str::from_utf8(MAGIC).unwrap()
        )));
    }
    let width = r.u8()? as usize;
    if width != T::WIDTH {
        return Err(Error::Format(format!(
            "checkpoint stores {width}-byte scalars but {}-byte scalars were requested",
            T::WIDTH
        )));
    }

    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let activation = activation_from_tag(r.u8()?)?;
        layers.push(LayerSpec {
            in_dim,
            out_dim,
            activation,
        });
    }

    let mut net = NetworkState::zeros(layers.clone())?;
    for (i, l) in layers.iter().enumerate() {
        let w = r.scalars::<T>(l.in_dim * l.out_dim)?;
        *net.weight_mut(i) = Matrix::from_vec(l.in_dim, l.out_dim, w)?;
        *net.bias_mut(i) = r.scalars::<T>(l.out_dim)?;
    }

    let mut bank = BiasBank::new();
    let n_entries = r.u32()? as usize;
    for _ in 0..n_entries {
        let task_id = r.u64()? as usize;
        let mut vectors = Vec::with_capacity(n_layers);
        for l in &layers {
            vectors.push(r.scalars::<T>(l.out_dim)?);
        }
        bank.insert(TaskBias::new(task_id, vectors))?;
    }

    if r.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint payload",
            buf.len() - r.pos
        )));
    }
    Ok((net, bank))
}

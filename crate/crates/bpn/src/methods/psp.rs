//! Binary superposition keys: per-task, per-layer +-1 context vectors
//! applied to layer inputs. Keys are pure functions of
//! `(master seed, task id, layer index)`, so only the master seed ever
//! needs to be stored.

use std::collections::BTreeMap;

use crate::net::{LayerSpec, TaskKeys};
use crate::numerics::rng::{sample_sign_vector, RngStream, StreamDomain};
use crate::scalar::Scalar;

/// Generates one +-1 key per layer, each the length of the layer's input.
pub fn gen_psp_keys<T: Scalar>(layers: &[LayerSpec], task_id: usize, master_seed: u64) -> TaskKeys<T> {
    let key_layers = layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut rng =
                RngStream::for_domain(master_seed, StreamDomain::PspKey, task_id as u64, i as u64);
            sample_sign_vector(l.in_dim, &mut rng).expect("layer in_dim >= 1")
        })
        .collect();
    TaskKeys::new(task_id, key_layers)
}

/// Cache of generated keys. Only `master_seed` is persistent state; every
/// entry is regenerable bit-exactly on demand.
#[derive(Clone, Debug)]
pub struct PspKeySet<T> {
    master_seed: u64,
    entries: BTreeMap<usize, TaskKeys<T>>,
}

impl<T: Scalar> PspKeySet<T> {
    pub fn new(master_seed: u64) -> Self {
        PspKeySet {
            master_seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn ensure(&mut self, layers: &[LayerSpec], task_id: usize) -> &TaskKeys<T> {
        self.entries
            .entry(task_id)
            .or_insert_with(|| gen_psp_keys(layers, task_id, self.master_seed))
    }

    pub fn get(&self, task_id: usize) -> Option<&TaskKeys<T>> {
        self.entries.get(&task_id)
    }
}

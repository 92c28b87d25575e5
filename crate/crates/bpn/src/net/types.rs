//! Network state, per-task bias units, and their containers.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Logit layer; softmax is applied inside the loss.
    SoftmaxOutput,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Builds the layer list for a plain MLP: ReLU hidden layers and a softmax
/// logit layer on top.
pub fn mlp_layers(input_dim: usize, hidden: &[usize], output_dim: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input_dim;
    for &h in hidden {
        layers.push(LayerSpec {
            in_dim: prev,
            out_dim: h,
            activation: Activation::Relu,
        });
        prev = h;
    }
    layers.push(LayerSpec {
        in_dim: prev,
        out_dim: output_dim,
        activation: Activation::SoftmaxOutput,
    });
    layers
}

/// Shared ("normal") weights and biases of the dense network.
#[derive(Clone, Debug)]
pub struct NetworkState<T> {
    layers: Vec<LayerSpec>,
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
}

impl<T: Scalar> NetworkState<T> {
    fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::shape("layer chain", pair[0].out_dim, pair[1].in_dim));
            }
        }
        let softmax_count = layers
            .iter()
            .filter(|l| l.activation == Activation::SoftmaxOutput)
            .count();
        if softmax_count != 1 || layers.last().unwrap().activation != Activation::SoftmaxOutput {
            return Err(Error::InvalidInput(
                "exactly one softmax-output layer is required and it must be last".into(),
            ));
        }
        Ok(())
    }

    pub fn zeros(layers: Vec<LayerSpec>) -> Result<Self> {
        Self::validate_layers(&layers)?;
        let weights = layers
            .iter()
            .map(|l| Matrix::zeros(l.in_dim, l.out_dim))
            .collect();
        let biases = layers.iter().map(|l| vec![T::zero(); l.out_dim]).collect();
        Ok(NetworkState {
            layers,
            weights,
            biases,
        })
    }

    /// Uniform init in `+-sqrt(6 / (in + out))` per layer; biases start at zero.
    pub fn init_uniform(layers: Vec<LayerSpec>, rng: &mut RngStream) -> Result<Self> {
        Self::validate_layers(&layers)?;
        let mut weights = Vec::with_capacity(layers.len());
        for l in &layers {
            let bound = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            weights.push(Matrix::from_fn(l.in_dim, l.out_dim, |_, _| {
                T::from_f64_lossy(rng.uniform_in(-bound, bound))
            }));
        }
        let biases = layers.iter().map(|l| vec![T::zero(); l.out_dim]).collect();
        Ok(NetworkState {
            layers,
            weights,
            biases,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn weight(&self, i: usize) -> &Matrix<T> {
        &self.weights[i]
    }

    pub fn weight_mut(&mut self, i: usize) -> &mut Matrix<T> {
        &mut self.weights[i]
    }

    pub fn bias(&self, i: usize) -> &[T] {
        &self.biases[i]
    }

    pub fn bias_mut(&mut self, i: usize) -> &mut Vec<T> {
        &mut self.biases[i]
    }

    /// Total count of shared parameters (weights + biases).
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.in_dim * l.out_dim + l.out_dim)
            .sum()
    }

    /// Sum of per-layer output widths: the number of bias-unit entries one
    /// task adds (every layer carries a unit, including the logit layer).
    pub fn bias_unit_width(&self) -> usize {
        self.layers.iter().map(|l| l.out_dim).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(Matrix::all_finite)
            && self
                .biases
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Trainable per-task bias factors: one `[1 x H]` row times one `[H x K]`
/// matrix per layer. Alive only while its task is being trained; afterwards
/// the product is frozen and the factors are dropped.
#[derive(Clone, Debug)]
pub struct BiasFactors<T> {
    task_id: usize,
    hidden: usize,
    m: Vec<Matrix<T>>,
    wt: Vec<Matrix<T>>,
}

impl<T: Scalar> BiasFactors<T> {
    /// `M` starts at zero so the initial bias contribution is exactly zero
    /// and task training begins from the unperturbed network. `Wt` uses the
    /// same uniform scheme as the shared weights.
    pub fn init(net: &NetworkState<T>, hidden: usize, task_id: usize, rng: &mut RngStream) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidInput("bias factor width H must be >= 1".into()));
        }
        let mut m = Vec::with_capacity(net.n_layers());
        let mut wt = Vec::with_capacity(net.n_layers());
        for l in net.layers() {
            let bound = (6.0 / (hidden + l.out_dim) as f64).sqrt();
            m.push(Matrix::zeros(1, hidden));
            wt.push(Matrix::from_fn(hidden, l.out_dim, |_, _| {
                T::from_f64_lossy(rng.uniform_in(-bound, bound))
            }));
        }
        Ok(BiasFactors {
            task_id,
            hidden,
            m,
            wt,
        })
    }

    pub fn task_id(&self) -> usize {
        self.task_id
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn m(&self, layer: usize) -> &Matrix<T> {
        &self.m[layer]
    }

    pub fn m_mut(&mut self, layer: usize) -> &mut Matrix<T> {
        &mut self.m[layer]
    }

    pub fn wt(&self, layer: usize) -> &Matrix<T> {
        &self.wt[layer]
    }

    pub fn wt_mut(&mut self, layer: usize) -> &mut Matrix<T> {
        &mut self.wt[layer]
    }

    pub fn n_layers(&self) -> usize {
        self.m.len()
    }

    /// Current bias vector for one layer: the `[1 x K]` product `M . Wt`.
    pub fn bias_vector(&self, layer: usize) -> Vec<T> {
        let prod = self.m[layer]
            .matmul(&self.wt[layer])
            .expect("factor shapes fixed at init");
        prod.data().to_vec()
    }
}

/// A task's consolidated (frozen) per-layer bias vectors.
#[derive(Clone, Debug)]
pub struct TaskBias<T> {
    task_id: usize,
    layers: Vec<Vec<T>>,
}

impl<T: Scalar> TaskBias<T> {
    pub(crate) fn new(task_id: usize, layers: Vec<Vec<T>>) -> Self {
        TaskBias { task_id, layers }
    }

    pub fn task_id(&self) -> usize {
        self.task_id
    }

    pub fn layer(&self, i: usize) -> &[T] {
        &self.layers[i]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Raw little-endian bytes of all layer vectors, for bit-identity checks
    /// and storage accounting.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for &v in layer {
                v.write_le(&mut out);
            }
        }
        out
    }
}

/// Frozen bias vectors for all consolidated tasks. Entries are immutable
/// once inserted; later training can only add new tasks.
#[derive(Clone, Debug, Default)]
pub struct BiasBank<T> {
    entries: BTreeMap<usize, TaskBias<T>>,
}

impl<T: Scalar> BiasBank<T> {
    pub fn new() -> Self {
        BiasBank {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, bias: TaskBias<T>) -> Result<()> {
        if self.entries.contains_key(&bias.task_id) {
            return Err(Error::DuplicateTask(bias.task_id));
        }
        self.entries.insert(bias.task_id, bias);
        Ok(())
    }

    pub fn get(&self, task_id: usize) -> Option<&TaskBias<T>> {
        self.entries.get(&task_id)
    }

    pub fn require(&self, task_id: usize) -> Result<&TaskBias<T>> {
        self.get(task_id).ok_or(Error::UnknownTask(task_id))
    }

    pub fn contains(&self, task_id: usize) -> bool {
        self.entries.contains_key(&task_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &TaskBias<T>)> {
        self.entries.iter()
    }
}

/// Per-layer binary +-1 context keys for one task, each the length of the
/// layer's input.
#[derive(Clone, Debug)]
pub struct TaskKeys<T> {
    task_id: usize,
    layers: Vec<Vec<T>>,
}

impl<T: Scalar> TaskKeys<T> {
    pub(crate) fn new(task_id: usize, layers: Vec<Vec<T>>) -> Self {
        TaskKeys { task_id, layers }
    }

    pub fn task_id(&self) -> usize {
        self.task_id
    }

    pub fn layer(&self, i: usize) -> &[T] {
        &self.layers[i]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Where the forward pass takes its additive bias term from.
#[derive(Clone, Copy)]
pub enum BiasSource<'a, T> {
    /// Plain network: the bias term is the zero vector.
    None,
    /// Live factors of the task currently being trained.
    Factors(&'a BiasFactors<T>),
    /// A frozen bank entry, selected by the task oracle at test time.
    Frozen(&'a TaskBias<T>),
}

impl<'a, T: Scalar> BiasSource<'a, T> {
    pub fn factors(&self) -> Option<&'a BiasFactors<T>> {
        match self {
            BiasSource::Factors(f) => Some(f),
            _ => None,
        }
    }
}

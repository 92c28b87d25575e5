//! Elastic weight consolidation: diagonal Fisher estimation and the
//! quadratic anchor penalty on the shared weights.
//!
//! State is kept online-style for any number of tasks: one accumulated
//! Fisher diagonal plus the latest anchor snapshot. It lives only in
//! memory during training and is never serialized; at rest an EWC-trained
//! model is just the plain checkpoint.

use crate::error::{Error, Result};
use crate::net::{backward, forward, BiasSource, NetworkState, TaskKeys};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;
use crate::numerics::softmax_xent;
use crate::scalar::Scalar;

/// Diagonal Fisher estimates, shaped like the shared weights and biases.
#[derive(Clone, Debug)]
pub struct FisherDiag<T> {
    pub w: Vec<Matrix<T>>,
    pub b: Vec<Vec<T>>,
}

impl<T: Scalar> FisherDiag<T> {
    fn zeros_like(net: &NetworkState<T>) -> Self {
        FisherDiag {
            w: net
                .layers()
                .iter()
                .map(|l| Matrix::zeros(l.in_dim, l.out_dim))
                .collect(),
            b: net.layers().iter().map(|l| vec![T::zero(); l.out_dim]).collect(),
        }
    }
}

/// Gradient of the quadratic penalty, shaped like the shared parameters.
#[derive(Clone, Debug)]
pub struct PenaltyGrad<T> {
    pub dw: Vec<Matrix<T>>,
    pub db: Vec<Vec<T>>,
}

/// Accumulated Fisher information and the anchor taken after the most
/// recently finished task.
#[derive(Clone, Debug)]
pub struct EwcState<T> {
    lambda: T,
    fisher: FisherDiag<T>,
    anchor_w: Vec<Matrix<T>>,
    anchor_b: Vec<Vec<T>>,
    tasks_absorbed: usize,
}

impl<T: Scalar> EwcState<T> {
    pub fn new(net: &NetworkState<T>, lambda: T) -> Self {
        EwcState {
            lambda,
            fisher: FisherDiag::zeros_like(net),
            anchor_w: net.layers().iter().enumerate().map(|(i, _)| net.weight(i).clone()).collect(),
            anchor_b: net.layers().iter().enumerate().map(|(i, _)| net.bias(i).to_vec()).collect(),
            tasks_absorbed: 0,
        }
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// True once at least one finished task constrains the weights.
    pub fn is_active(&self) -> bool {
        self.tasks_absorbed > 0
    }

    pub fn tasks_absorbed(&self) -> usize {
        self.tasks_absorbed
    }

    pub fn fisher(&self) -> &FisherDiag<T> {
        &self.fisher
    }

    /// Adds a task's Fisher diagonal into the accumulator and re-anchors at
    /// the current weights.
    pub fn absorb_task(&mut self, fisher: &FisherDiag<T>, net: &NetworkState<T>) -> Result<()> {
        if fisher.w.len() != self.fisher.w.len() {
            return Err(Error::shape("fisher absorb", self.fisher.w.len(), fisher.w.len()));
        }
        for (acc, f) in self.fisher.w.iter_mut().zip(&fisher.w) {
            acc.add_assign(f)?;
        }
        for (acc, f) in self.fisher.b.iter_mut().zip(&fisher.b) {
            for (a, &v) in acc.iter_mut().zip(f) {
                *a += v;
            }
        }
        for (i, a) in self.anchor_w.iter_mut().enumerate() {
            *a = net.weight(i).clone();
        }
        for (i, a) in self.anchor_b.iter_mut().enumerate() {
            *a = net.bias(i).to_vec();
        }
        self.tasks_absorbed += 1;
        Ok(())
    }

    /// Penalty `sum_j lambda F_j (theta_j - theta*_j)^2` and its gradient
    /// `2 lambda F_j (theta_j - theta*_j)`.
    pub fn penalty(&self, net: &NetworkState<T>) -> Result<(T, PenaltyGrad<T>)> {
        if self.anchor_w.len() != net.n_layers() {
            return Err(Error::shape("ewc penalty", self.anchor_w.len(), net.n_layers()));
        }
        let two_lambda = self.lambda + self.lambda;
        let mut penalty = T::zero();
        let mut dw = Vec::with_capacity(net.n_layers());
        let mut db = Vec::with_capacity(net.n_layers());
        for i in 0..net.n_layers() {
            if net.weight(i).shape() != self.anchor_w[i].shape() {
                return Err(Error::shape(
                    "ewc penalty",
                    format!("{:?}", self.anchor_w[i].shape()),
                    format!("{:?}", net.weight(i).shape()),
                ));
            }
            let mut gw = Matrix::zeros(net.weight(i).rows(), net.weight(i).cols());
            {
                let w = net.weight(i).data();
                let a = self.anchor_w[i].data();
                let f = self.fisher.w[i].data();
                for (j, g) in gw.data_mut().iter_mut().enumerate() {
                    let delta = w[j] - a[j];
                    penalty += self.lambda * f[j] * delta * delta;
                    *g = two_lambda * f[j] * delta;
                }
            }
            let gb = net
                .bias(i)
                .iter()
                .zip(&self.anchor_b[i])
                .zip(&self.fisher.b[i])
                .map(|((&b, &a), &f)| {
                    let delta = b - a;
                    penalty += self.lambda * f * delta * delta;
                    two_lambda * f * delta
                })
                .collect();
            dw.push(gw);
            db.push(gb);
        }
        Ok((penalty, PenaltyGrad { dw, db }))
    }
}

/// Mean squared per-example gradient of `-log p(y|x)` over a sample of the
/// dataset, taken with the task's own bias/keys active. Covers the shared
/// weights and biases only; frozen bias units are never penalized.
#[allow(clippy::too_many_arguments)]
pub fn estimate_fisher<T: Scalar>(
    net: &NetworkState<T>,
    bias: BiasSource<'_, T>,
    keys: Option<&TaskKeys<T>>,
    features: &Matrix<T>,
    labels: &[usize],
    class_columns: Option<&[usize]>,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<FisherDiag<T>> {
    if features.rows() == 0 {
        return Err(Error::InvalidInput("fisher estimation needs a non-empty dataset".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("fisher estimation needs n_samples >= 1".into()));
    }
    let n = n_samples.min(features.rows());
    let mut indices = rng.sample_indices(features.rows(), n);
    indices.sort_unstable();

    let mut fisher = FisherDiag::zeros_like(net);
    let inv_n = T::one() / T::from_usize(n).unwrap();
    for &idx in &indices {
        let x = features.gather_rows(&[idx]);
        let (logits, trace) = forward(net, bias, keys, &x)?;
        let dlogits = match class_columns {
            None => softmax_xent(&logits, &labels[idx..=idx])?.1,
            Some(cols) => {
                let (_, small) = softmax_xent(&logits.gather_cols(cols), &labels[idx..=idx])?;
                let mut full = Matrix::zeros(1, logits.cols());
                for (j, &c) in cols.iter().enumerate() {
                    full.set(0, c, small.get(0, j));
                }
                full
            }
        };
        let grads = backward(net, bias, keys, &trace, &dlogits)?;
        for (acc, g) in fisher.w.iter_mut().zip(&grads.dw) {
            for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += v * v * inv_n;
            }
        }
        for (acc, g) in fisher.b.iter_mut().zip(&grads.db) {
            for (a, &v) in acc.iter_mut().zip(g) {
                *a += v * v * inv_n;
            }
        }
    }
    Ok(fisher)
}

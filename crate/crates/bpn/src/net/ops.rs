//! Forward/backward rules and parameter updates.
//!
//! Everything is batch-first: activations are `[B x K]`, weights
//! `[in x out]`. Per layer `i` the forward rule is
//!
//! ```text
//! u_i = input (elementwise * key_i when binary keys are active)
//! z_i = u_i . W_i + b_i + BIAS_i        (BIAS broadcast over the batch)
//! v_i = sigma(z_i)                      (logit layer: v = z)
//! ```
//!
//! and the backward rule, with `G_i` the gradient w.r.t. `z_i`:
//!
//! ```text
//! dW_i  = u_i^T . G_i          db_i = dBIAS_i = sum_batch G_i
//! dM_i  = dBIAS_i . Wt_i^T     dWt_i = M_i^T . dBIAS_i
//! G_im1 = (G_i . W_i^T (* key_i)) * relu'(z_im1)
//! ```

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Scalar;

use super::types::{Activation, BiasFactors, BiasSource, NetworkState, TaskBias, TaskKeys};

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    /// Key-applied input to each layer (`u_i`); `inputs[0]` is the batch
    /// itself when no keys are active.
    pub inputs: Vec<Matrix<T>>,
    /// Pre-activations `z_i`.
    pub pre: Vec<Matrix<T>>,
    /// Post-activations `v_i`; for the logit layer this equals `z`.
    pub post: Vec<Matrix<T>>,
}

/// Gradients mirroring the parameter shapes. `dm`/`dwt` are present only
/// when live bias factors took part in the pass; `dbias` is their shared
/// upstream (identical to `db` because the bias term is additive).
#[derive(Clone, Debug)]
pub struct GradSet<T> {
    pub dw: Vec<Matrix<T>>,
    pub db: Vec<Vec<T>>,
    pub dbias: Option<Vec<Vec<T>>>,
    pub dm: Option<Vec<Matrix<T>>>,
    pub dwt: Option<Vec<Matrix<T>>>,
    /// Gradient w.r.t. the input batch (diagnostic).
    pub dx: Matrix<T>,
}

impl<T: Scalar> GradSet<T> {
    pub fn all_finite(&self) -> bool {
        self.dw.iter().all(Matrix::all_finite)
            && self.db.iter().all(|b| b.iter().all(|v| v.is_finite()))
            && self
                .dm
                .iter()
                .flatten()
                .chain(self.dwt.iter().flatten())
                .all(Matrix::all_finite)
    }
}

fn check_keys<T: Scalar>(net: &NetworkState<T>, keys: &TaskKeys<T>) -> Result<()> {
    if keys.n_layers() != net.n_layers() {
        return Err(Error::shape("task keys", net.n_layers(), keys.n_layers()));
    }
    for (i, l) in net.layers().iter().enumerate() {
        if keys.layer(i).len() != l.in_dim {
            return Err(Error::shape("key length", l.in_dim, keys.layer(i).len()));
        }
    }
    Ok(())
}

fn bias_term<T: Scalar>(bias: &BiasSource<'_, T>, layer: usize, width: usize) -> Result<Option<Vec<T>>> {
    let v = match bias {
        BiasSource::None => return Ok(None),
        BiasSource::Factors(f) => f.bias_vector(layer),
        BiasSource::Frozen(t) => t.layer(layer).to_vec(),
    };
    if v.len() != width {
        return Err(Error::shape("bias term", width, v.len()));
    }
    Ok(Some(v))
}

/// Runs the network on a batch, returning logits (softmax lives in the
/// loss) and the trace consumed by [`backward`].
pub fn forward<T: Scalar>(
    net: &NetworkState<T>,
    bias: BiasSource<'_, T>,
    keys: Option<&TaskKeys<T>>,
    x: &Matrix<T>,
) -> Result<(Matrix<T>, ForwardTrace<T>)> {
    if x.cols() != net.input_dim() {
        return Err(Error::shape("forward input", net.input_dim(), x.cols()));
    }
    if let BiasSource::Factors(f) = &bias {
        if f.n_layers() != net.n_layers() {
            return Err(Error::shape("bias factors", net.n_layers(), f.n_layers()));
        }
    }
    if let BiasSource::Frozen(t) = &bias {
        if t.n_layers() != net.n_layers() {
            return Err(Error::shape("frozen bias", net.n_layers(), t.n_layers()));
        }
    }
    if let Some(k) = keys {
        check_keys(net, k)?;
    }

    let n = net.n_layers();
    let mut trace = ForwardTrace {
        inputs: Vec::with_capacity(n),
        pre: Vec::with_capacity(n),
        post: Vec::with_capacity(n),
    };

    let mut cur = x.clone();
    for (i, layer) in net.layers().iter().enumerate() {
        let mut u = cur;
        if let Some(k) = keys {
            u.mul_row_broadcast(k.layer(i))?;
        }
        let mut z = u.matmul(net.weight(i))?;
        z.add_row_broadcast(net.bias(i))?;
        if let Some(extra) = bias_term(&bias, i, layer.out_dim)? {
            z.add_row_broadcast(&extra)?;
        }
        let v = match layer.activation {
            Activation::Relu => z.map(|t| t.max(T::zero())),
            Activation::SoftmaxOutput | Activation::Linear => z.clone(),
        };
        trace.inputs.push(u);
        trace.pre.push(z);
        trace.post.push(v.clone());
        cur = v;
    }
    Ok((cur, trace))
}

/// Backpropagates `dlogits` through a traced forward pass.
pub fn backward<T: Scalar>(
    net: &NetworkState<T>,
    bias: BiasSource<'_, T>,
    keys: Option<&TaskKeys<T>>,
    trace: &ForwardTrace<T>,
    dlogits: &Matrix<T>,
) -> Result<GradSet<T>> {
    let n = net.n_layers();
    if trace.pre.len() != n || trace.inputs.len() != n {
        return Err(Error::shape("trace layers", n, trace.pre.len()));
    }
    if dlogits.shape() != trace.pre[n - 1].shape() {
        return Err(Error::shape(
            "dlogits",
            format!("{:?}", trace.pre[n - 1].shape()),
            format!("{:?}", dlogits.shape()),
        ));
    }
    if let Some(k) = keys {
        check_keys(net, k)?;
    }
    let factors = bias.factors();

    let mut dw = vec![Matrix::zeros(0, 0); n];
    let mut db = vec![Vec::new(); n];
    let mut dbias = factors.map(|_| vec![Vec::new(); n]);
    let mut dm = factors.map(|_| vec![Matrix::zeros(0, 0); n]);
    let mut dwt = factors.map(|_| vec![Matrix::zeros(0, 0); n]);

    let mut grad = dlogits.clone();
    for i in (0..n).rev() {
        let u = &trace.inputs[i];
        dw[i] = u.matmul_tn(&grad)?;
        db[i] = grad.col_sums();

        if let Some(f) = factors {
            let dbias_row = Matrix::row_vector(db[i].clone());
            dm.as_mut().unwrap()[i] = dbias_row.matmul_nt(f.wt(i))?;
            dwt.as_mut().unwrap()[i] = f.m(i).matmul_tn(&dbias_row)?;
            dbias.as_mut().unwrap()[i] = dbias_row.data().to_vec();
        }

        // Gradient w.r.t. this layer's (key-applied) input.
        let mut dinput = grad.matmul_nt(net.weight(i))?;
        if let Some(k) = keys {
            dinput.mul_row_broadcast(k.layer(i))?;
        }
        if i == 0 {
            return Ok(GradSet {
                dw,
                db,
                dbias,
                dm,
                dwt,
                dx: dinput,
            });
        }
        grad = match net.layers()[i - 1].activation {
            Activation::Relu => {
                let mask = trace.pre[i - 1].map(|z| if z > T::zero() { T::one() } else { T::zero() });
                dinput.hadamard(&mask)?
            }
            Activation::Linear => dinput,
            Activation::SoftmaxOutput => {
                return Err(Error::InvalidInput(
                    "softmax-output layer cannot feed a later layer".into(),
                ))
            }
        };
    }
    unreachable!("loop returns at layer 0")
}

impl<T: Scalar> NetworkState<T> {
    /// Plain SGD step on the shared weights and biases.
    pub fn apply_sgd_step(&mut self, grads: &GradSet<T>, lr: T) -> Result<()> {
        if lr <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if grads.dw.len() != self.n_layers() {
            return Err(Error::shape("sgd step", self.n_layers(), grads.dw.len()));
        }
        if !grads.all_finite() {
            return Err(Error::Numeric("non-finite gradient in SGD step".into()));
        }
        for i in 0..self.n_layers() {
            self.weight_mut(i).add_scaled(&grads.dw[i], -lr)?;
            if grads.db[i].len() != self.bias(i).len() {
                return Err(Error::shape("sgd bias step", self.bias(i).len(), grads.db[i].len()));
            }
            for (b, &g) in self.bias_mut(i).iter_mut().zip(&grads.db[i]) {
                *b -= lr * g;
            }
        }
        Ok(())
    }
}

fn factor_grads<'g, T: Scalar>(grads: &'g GradSet<T>) -> Result<(&'g [Matrix<T>], &'g [Matrix<T>])> {
    match (&grads.dm, &grads.dwt) {
        (Some(dm), Some(dwt)) => Ok((dm, dwt)),
        _ => Err(Error::InvalidInput(
            "gradient set carries no bias-factor gradients".into(),
        )),
    }
}

impl<T: Scalar> BiasFactors<T> {
    /// Sign-gradient ("beneficial direction") step: `M -= eps * sign(dM)`
    /// with `sign(0) = 0`, plus a plain gradient step on `Wt`.
    pub fn apply_fgsd_step(&mut self, grads: &GradSet<T>, epsilon: T, lr_wt: T) -> Result<()> {
        if epsilon <= T::zero() || lr_wt <= T::zero() {
            return Err(Error::InvalidInput(
                "fgsd step sizes must be positive".into(),
            ));
        }
        let (dm, dwt) = factor_grads(grads)?;
        for i in 0..self.n_layers() {
            let step = dm[i].map(|g| {
                if g > T::zero() {
                    epsilon
                } else if g < T::zero() {
                    -epsilon
                } else {
                    T::zero()
                }
            });
            self.m_mut(i).add_scaled(&step, -T::one())?;
            self.wt_mut(i).add_scaled(&dwt[i], -lr_wt)?;
        }
        Ok(())
    }

    /// Ablation step: `M` moves in the plain gradient direction instead of
    /// the sign direction (`Wt` unchanged from the FGSD variant).
    pub fn apply_gd_step(&mut self, grads: &GradSet<T>, lr: T, lr_wt: T) -> Result<()> {
        if lr <= T::zero() || lr_wt <= T::zero() {
            return Err(Error::InvalidInput("gd step sizes must be positive".into()));
        }
        let (dm, dwt) = factor_grads(grads)?;
        for i in 0..self.n_layers() {
            self.m_mut(i).add_scaled(&dm[i], -lr)?;
            self.wt_mut(i).add_scaled(&dwt[i], -lr_wt)?;
        }
        Ok(())
    }
}

/// Multiplies the factors out into frozen per-layer vectors, consuming the
/// factors: after a task the products are all that is kept.
pub fn consolidate_bias<T: Scalar>(factors: BiasFactors<T>) -> TaskBias<T> {
    let layers = (0..factors.n_layers())
        .map(|i| factors.bias_vector(i))
        .collect();
    TaskBias::new(factors.task_id(), layers)
}

//! Continual learning with task-dependent beneficial-perturbation bias units.
//!
//! A dense ReLU network carries one extra additive bias vector per layer and
//! per task. During a task the vector is factored as `M . Wt` and trained
//! with a sign-gradient step on `M`; afterwards the product is frozen into a
//! per-task bank and the factors are discarded. Activating a task's frozen
//! vectors at test time biases the shared network back toward that task,
//! while the shared weights themselves are protected with an elastic
//! quadratic penalty (EWC) or binary superposition keys (PSP).
//!
//! All core math is generic over the scalar type: experiments run in `f32`,
//! gradient checks in `f64`.

pub mod error;
pub mod numerics;
pub mod harness;
pub mod methods;
pub mod net;
pub mod scalar;
pub mod tasks;

pub use error::{Error, Result};
pub use numerics::{Matrix, RngStream};
pub use scalar::Scalar;

/// Experiment-throughput precision.
pub type Real = f32;

pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;

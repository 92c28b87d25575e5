//! Deterministic dense linear algebra, losses, and seeded randomness.

pub mod loss;
pub mod matrix;
pub mod rng;

pub use loss::{softmax_rows, softmax_xent};
pub use matrix::Matrix;
pub use rng::{sample_sign_vector, stream_id, RngStream, StreamDomain, RNG_ALGORITHM};

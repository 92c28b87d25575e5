//! The perturbation-biased network: layers, bias-unit lifecycle, exact
//! forward/backward rules, parameter steps, and the checkpoint container.

pub mod checkpoint;
pub mod ops;
pub mod types;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, save_checkpoint};
pub use ops::{backward, consolidate_bias, forward, ForwardTrace, GradSet};
pub use types::{
    mlp_layers, Activation, BiasBank, BiasFactors, BiasSource, LayerSpec, NetworkState, TaskBias,
    TaskKeys,
};

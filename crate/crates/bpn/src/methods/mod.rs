//! Continual-learning strategies and the per-task training loop.

pub mod ewc;
pub mod psp;
pub mod training;

use serde::{Deserialize, Serialize};

pub use ewc::{estimate_fisher, EwcState, FisherDiag, PenaltyGrad};
pub use psp::{gen_psp_keys, PspKeySet};
pub use training::{
    evaluate, evaluate_for_method, train_task, wrong_key_probe, EpochStats, EvalReport,
    TrainOutcome,
};

/// The implemented method lineup: plain SGD, the two constraint baselines,
/// the bias-unit variants on top of each constraint, the gradient-direction
/// ablation, and per-task single-task learning as the upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "SGD")]
    Sgd,
    #[serde(rename = "EWC")]
    Ewc,
    #[serde(rename = "PSP")]
    Psp,
    #[serde(rename = "BD_EWC")]
    BdEwc,
    #[serde(rename = "BD_PSP")]
    BdPsp,
    #[serde(rename = "GD_EWC")]
    GdEwc,
    #[serde(rename = "STL")]
    Stl,
}

impl MethodKind {
    /// Trains per-task bias factors (and therefore consolidates them).
    pub fn uses_factors(self) -> bool {
        matches!(self, MethodKind::BdEwc | MethodKind::BdPsp | MethodKind::GdEwc)
    }

    /// Constrains the shared weights with the quadratic Fisher penalty.
    pub fn uses_ewc(self) -> bool {
        matches!(self, MethodKind::Ewc | MethodKind::BdEwc | MethodKind::GdEwc)
    }

    /// Routes layer inputs through per-task binary keys.
    pub fn uses_keys(self) -> bool {
        matches!(self, MethodKind::Psp | MethodKind::BdPsp)
    }

    /// Updates `M` with the sign step rather than the raw gradient.
    pub fn sign_step_on_m(self) -> bool {
        matches!(self, MethodKind::BdEwc | MethodKind::BdPsp)
    }

    /// Orchestration mode: a fresh network per task.
    pub fn fresh_net_per_task(self) -> bool {
        matches!(self, MethodKind::Stl)
    }

    pub const ALL: [MethodKind; 7] = [
        MethodKind::Sgd,
        MethodKind::Ewc,
        MethodKind::Psp,
        MethodKind::BdEwc,
        MethodKind::BdPsp,
        MethodKind::GdEwc,
        MethodKind::Stl,
    ];
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            MethodKind::Sgd => "SGD",
            MethodKind::Ewc => "EWC",
            MethodKind::Psp => "PSP",
            MethodKind::BdEwc => "BD_EWC",
            MethodKind::BdPsp => "BD_PSP",
            MethodKind::GdEwc => "GD_EWC",
            MethodKind::Stl => "STL",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for MethodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "SGD" => Ok(MethodKind::Sgd),
            "EWC" => Ok(MethodKind::Ewc),
            "PSP" => Ok(MethodKind::Psp),
            "BD_EWC" => Ok(MethodKind::BdEwc),
            "BD_PSP" => Ok(MethodKind::BdPsp),
            "GD_EWC" => Ok(MethodKind::GdEwc),
            "STL" => Ok(MethodKind::Stl),
            other => Err(format!("unknown method kind '{other}'")),
        }
    }
}

fn default_lr() -> f64 {
    0.01
}

fn default_epochs() -> usize {
    5
}

fn default_batch() -> usize {
    64
}

fn default_fisher_samples() -> usize {
    1000
}

/// Per-method hyperparameters. `epsilon` and `h` are meaningful only for
/// the bias-unit kinds, `lambda` only for the EWC kinds; [`MethodConfig::validate`]
/// enforces that correspondence both ways.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodConfig {
    pub kind: MethodKind,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Step size for the second bias factor `Wt`.
    #[serde(default = "default_lr")]
    pub lr_wt: f64,
    /// Sign-step size for the first bias factor `M`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Hidden width of the bias factorization.
    #[serde(default, alias = "H")]
    pub h: Option<usize>,
    /// Strength of the quadratic anchor penalty.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Optional per-method override of the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Ablation: restrict the training softmax to the current task's
    /// classes even in single-head mode.
    #[serde(default)]
    pub masked_single_head: bool,
    #[serde(default = "default_fisher_samples")]
    pub fisher_samples: usize,
    /// Draw Fisher labels from the model's softmax instead of the dataset.
    #[serde(default)]
    pub fisher_sampled_labels: bool,
}

impl MethodConfig {
    pub fn new(kind: MethodKind) -> Self {
        let factors = kind.uses_factors();
        MethodConfig {
            kind,
            lr: default_lr(),
            lr_wt: default_lr(),
            epsilon: factors.then_some(1e-3),
            h: factors.then_some(100),
            lambda: kind.uses_ewc().then_some(2e3),
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: None,
            masked_single_head: false,
            fisher_samples: default_fisher_samples(),
            fisher_sampled_labels: false,
        }
    }

    /// All validation failures at once; empty means the config is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let k = self.kind;
        if self.lr <= 0.0 {
            errs.push(format!("{k}: lr must be positive"));
        }
        if self.epochs == 0 {
            errs.push(format!("{k}: epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            errs.push(format!("{k}: batch_size must be >= 1"));
        }
        if k.uses_factors() {
            match self.epsilon {
                Some(e) if e > 0.0 => {}
                Some(_) => errs.push(format!("{k}: epsilon must be positive")),
                None => errs.push(format!("{k}: epsilon is required")),
            }
            match self.h {
                Some(h) if h >= 1 => {}
                _ => errs.push(format!("{k}: h (bias factor width) >= 1 is required")),
            }
            if self.lr_wt <= 0.0 {
                errs.push(format!("{k}: lr_wt must be positive"));
            }
        } else {
            if self.epsilon.is_some() {
                errs.push(format!("{k}: epsilon is only meaningful for bias-unit kinds"));
            }
            if self.h.is_some() {
                errs.push(format!("{k}: h is only meaningful for bias-unit kinds"));
            }
        }
        if k.uses_ewc() {
            match self.lambda {
                Some(l) if l > 0.0 => {}
                Some(_) => errs.push(format!("{k}: lambda must be positive")),
                None => errs.push(format!("{k}: lambda is required")),
            }
            if self.fisher_samples == 0 {
                errs.push(format!("{k}: fisher_samples must be >= 1"));
            }
        } else if self.lambda.is_some() {
            errs.push(format!("{k}: lambda is only meaningful for EWC kinds"));
        }
        errs
    }
}

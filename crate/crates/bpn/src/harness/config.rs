//! Experiment configuration: a flat TOML file (sections of `key = value`).
//!
//! Every field has a documented default; the fully resolved configuration
//! is echoed into the output directory at run start for provenance.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::methods::{MethodConfig, MethodKind};
use crate::tasks::mnist::resolve_data_dir;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    IncrementalMnist,
    PermutedMnist,
    Toy2d,
    Gradcheck,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::IncrementalMnist => "incremental_mnist",
            ExperimentKind::PermutedMnist => "permuted_mnist",
            ExperimentKind::Toy2d => "toy2d",
            ExperimentKind::Gradcheck => "gradcheck",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NetConfig {
    /// Hidden layer widths; input/output dims come from the experiment.
    #[serde(default)]
    pub hidden: Vec<usize>,
}

fn default_n_tasks() -> usize {
    5
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/out")
}

fn default_classes_per_task() -> usize {
    2
}

fn default_heatmap_resolution() -> usize {
    64
}

fn default_gradcheck_seeds() -> usize {
    50
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_n_tasks")]
    pub n_tasks: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Dataset root; falls back to `BPN_DATA_DIR`, then `./data`.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    /// Class count per task for the incremental split.
    #[serde(default = "default_classes_per_task")]
    pub classes_per_task: usize,
    /// Optional cap on training examples per task (deterministic prefix).
    #[serde(default)]
    pub train_limit: Option<usize>,
    /// Optional cap on test examples per evaluation (deterministic prefix).
    #[serde(default)]
    pub eval_limit: Option<usize>,
    #[serde(default = "default_heatmap_resolution")]
    pub heatmap_resolution: usize,
    /// Random nets checked when `experiment = "gradcheck"`.
    #[serde(default = "default_gradcheck_seeds")]
    pub gradcheck_seeds: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        Ok(cfg)
    }

    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn data_dir(&self) -> PathBuf {
        resolve_data_dir(self.data_dir.as_deref())
    }

    /// Collects every validation failure before reporting any.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.seeds.is_empty() {
            errs.push("seeds must be non-empty".to_string());
        }
        if self.n_tasks == 0 {
            errs.push("n_tasks must be >= 1".to_string());
        }
        match self.experiment {
            ExperimentKind::Gradcheck => {
                if self.gradcheck_seeds == 0 {
                    errs.push("gradcheck_seeds must be >= 1".to_string());
                }
            }
            kind => {
                if self.methods.is_empty() {
                    errs.push("at least one [[methods]] entry is required".to_string());
                }
                if kind == ExperimentKind::IncrementalMnist && self.classes_per_task == 0 {
                    errs.push("classes_per_task must be >= 1".to_string());
                }
                if matches!(
                    kind,
                    ExperimentKind::IncrementalMnist | ExperimentKind::PermutedMnist
                ) {
                    let dir = self.data_dir();
                    if !dir.is_dir() {
                        errs.push(format!(
                            "dataset directory {} does not exist (set data_dir or BPN_DATA_DIR)",
                            dir.display()
                        ));
                    }
                }
            }
        }
        for m in &self.methods {
            errs.extend(m.validate());
        }
        let kinds: Vec<MethodKind> = self.methods.iter().map(|m| m.kind).collect();
        for (i, k) in kinds.iter().enumerate() {
            if kinds[..i].contains(k) {
                errs.push(format!("method {k} listed more than once"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_with_defaults() {
        let text = r#"
experiment = "toy2d"
seeds = [1, 2]

[net]
hidden = [16, 16]

[[methods]]
kind = "SGD"

[[methods]]
kind = "BD_EWC"
epsilon = 0.002
h = 20
lambda = 2000.0
"#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Toy2d);
        assert_eq!(cfg.methods.len(), 2);
        assert_eq!(cfg.methods[1].h, Some(20));
        assert_eq!(cfg.methods[0].epochs, 5); // default echoed
        let echoed = cfg.resolved_toml();
        let cfg2: ExperimentConfig = toml::from_str(&echoed).unwrap();
        assert_eq!(cfg2.methods[0].epochs, 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_collects_every_failure_at_once() {
        let mut bad = ExperimentConfig {
            experiment: ExperimentKind::Toy2d,
            n_tasks: 0,
            seeds: vec![],
            output_dir: PathBuf::from("x"),
            data_dir: None,
            net: NetConfig::default(),
            methods: vec![],
            classes_per_task: 2,
            train_limit: None,
            eval_limit: None,
            heatmap_resolution: 64,
            gradcheck_seeds: 50,
        };
        let mut m = MethodConfig::new(MethodKind::Sgd);
        m.epsilon = Some(1.0); // not meaningful for SGD
        bad.methods.push(m);
        let err = bad.validate().unwrap_err();
        match err {
            Error::Config(list) => {
                assert!(list.len() >= 3, "{list:?}");
                assert!(list.iter().any(|e| e.contains("seeds")));
                assert!(list.iter().any(|e| e.contains("n_tasks")));
                assert!(list.iter().any(|e| e.contains("epsilon")));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_data_dir_is_reported() {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::IncrementalMnist,
            n_tasks: 5,
            seeds: vec![1],
            output_dir: PathBuf::from("x"),
            data_dir: Some(PathBuf::from("/definitely/not/here")),
            net: NetConfig { hidden: vec![8] },
            methods: vec![MethodConfig::new(MethodKind::Sgd)],
            classes_per_task: 2,
            train_limit: None,
            eval_limit: None,
            heatmap_resolution: 64,
            gradcheck_seeds: 50,
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("dataset directory"));
    }
}

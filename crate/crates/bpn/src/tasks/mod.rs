//! Datasets and task-sequence construction.

pub mod clusters;
pub mod mnist;
pub mod splits;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Scalar;

pub use clusters::{gen_clusters, ClusterExperiment, Region};
pub use mnist::{load_mnist_dir, load_mnist_idx};
pub use splits::{permutation_for, permute_tasks, split_incremental, split_incremental_shuffled};

/// Supervised examples: `[N x D]` features in `[0, 1]` plus class indices.
#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
    pub class_names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Inconsistent(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Checks the field invariants: bounded features and in-range labels.
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Inconsistent(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        let ok = self
            .features
            .data()
            .iter()
            .all(|v| v.is_finite() && *v >= T::zero() && *v <= T::one());
        if !ok {
            return Err(Error::Numeric("features must be finite and in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One supervised task in a sequence. Labels in `train`/`test` are
/// task-local (`0..head_dim`); `global_class_ids[local]` maps them into the
/// sequence-wide class space for single-head training.
#[derive(Clone, Debug)]
pub struct Task<T> {
    pub task_id: usize,
    pub train: Dataset<T>,
    pub test: Dataset<T>,
    pub global_class_ids: Vec<usize>,
    pub head_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadMode {
    /// One output layer over the union of all classes seen so far.
    SingleHead,
    /// Each task reads out of its own class columns, chosen by the task
    /// oracle at test time.
    MultiHead,
}

impl std::fmt::Display for HeadMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HeadMode::SingleHead => write!(f, "single_head"),
            HeadMode::MultiHead => write!(f, "multi_head"),
        }
    }
}

pub(crate) enum Blueprint<T> {
    Owned(Arc<Task<T>>),
    /// Pixel-permuted view of a shared base dataset, materialized on demand
    /// so a long sequence does not hold every permuted copy at once.
    Permuted {
        task_id: usize,
        base_train: Arc<Dataset<T>>,
        base_test: Arc<Dataset<T>>,
        perm: Vec<u32>,
        n_classes: usize,
    },
}

/// An ordered list of tasks plus the evaluation protocol.
pub struct TaskSequence<T> {
    head_mode: HeadMode,
    total_classes: usize,
    blueprints: Vec<Blueprint<T>>,
}

impl<T: Scalar> TaskSequence<T> {
    pub fn from_tasks(tasks: Vec<Task<T>>, head_mode: HeadMode, total_classes: usize) -> Result<Self> {
        if head_mode == HeadMode::SingleHead {
            // Global ids must be disjoint and cover [0, total_classes).
            let mut seen = vec![false; total_classes];
            for t in &tasks {
                for &g in &t.global_class_ids {
                    if g >= total_classes || seen[g] {
                        return Err(Error::Inconsistent(format!(
                            "global class id {g} repeated or out of range"
                        )));
                    }
                    seen[g] = true;
                }
            }
            if !seen.iter().all(|&s| s) {
                return Err(Error::Inconsistent(
                    "single-head tasks must cover every class".into(),
                ));
            }
        }
        Ok(TaskSequence {
            head_mode,
            total_classes,
            blueprints: tasks.into_iter().map(|t| Blueprint::Owned(Arc::new(t))).collect(),
        })
    }

    pub(crate) fn from_blueprints(
        blueprints: Vec<Blueprint<T>>,
        head_mode: HeadMode,
        total_classes: usize,
    ) -> Self {
        TaskSequence {
            head_mode,
            total_classes,
            blueprints,
        }
    }

    pub fn len(&self) -> usize {
        self.blueprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blueprints.is_empty()
    }

    pub fn head_mode(&self) -> HeadMode {
        self.head_mode
    }

    pub fn total_classes(&self) -> usize {
        self.total_classes
    }

    /// Task ids as they appear in order (1-based by construction).
    pub fn task_ids(&self) -> Vec<usize> {
        self.blueprints
            .iter()
            .map(|b| match b {
                Blueprint::Owned(t) => t.task_id,
                Blueprint::Permuted { task_id, .. } => *task_id,
            })
            .collect()
    }

    /// Materializes the `idx`-th task (cheap clone for owned tasks, a fresh
    /// permuted copy otherwise).
    pub fn task(&self, idx: usize) -> Arc<Task<T>> {
        match &self.blueprints[idx] {
            Blueprint::Owned(t) => Arc::clone(t),
            Blueprint::Permuted {
                task_id,
                base_train,
                base_test,
                perm,
                n_classes,
            } => {
                let apply = |ds: &Dataset<T>| {
                    let mut features = Matrix::zeros(ds.features.rows(), ds.features.cols());
                    for r in 0..ds.features.rows() {
                        let src = ds.features.row(r);
                        let dst = features.row_mut(r);
                        for (j, &p) in perm.iter().enumerate() {
                            dst[j] = src[p as usize];
                        }
                    }
                    Dataset {
                        features,
                        labels: ds.labels.clone(),
                        class_names: ds.class_names.clone(),
                    }
                };
                Arc::new(Task {
                    task_id: *task_id,
                    train: apply(base_train),
                    test: apply(base_test),
                    global_class_ids: (0..*n_classes).collect(),
                    head_dim: *n_classes,
                })
            }
        }
    }
}

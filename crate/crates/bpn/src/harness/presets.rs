//! Canned experiment configurations. The committed `configs/*.toml` files
//! mirror these; the builders here are the single source of truth used by
//! the CLI shortcuts and the acceptance suite.

use std::path::PathBuf;

use crate::methods::{MethodConfig, MethodKind};

use super::config::{ExperimentConfig, ExperimentKind, NetConfig};

fn method(kind: MethodKind, f: impl FnOnce(&mut MethodConfig)) -> MethodConfig {
    let mut cfg = MethodConfig::new(kind);
    f(&mut cfg);
    cfg
}

/// Two sequential 2-D cluster tasks on a small net, five seeds. The sign
/// step is large relative to the gradient step so the task-1 bias vectors
/// stay strong after task 2.
pub fn toy2d(output_dir: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKind::Toy2d,
        n_tasks: 2,
        seeds: vec![1, 2, 3, 4, 5],
        output_dir,
        data_dir: None,
        net: NetConfig {
            hidden: vec![16, 16],
        },
        methods: vec![
            method(MethodKind::Sgd, |m| {
                m.lr = 0.02;
                m.epochs = 150;
                m.batch_size = 32;
            }),
            method(MethodKind::GdEwc, |m| {
                m.lr = 0.02;
                m.epochs = 150;
                m.batch_size = 32;
                m.epsilon = Some(2e-3);
                m.h = Some(20);
                m.lambda = Some(200.0);
                m.fisher_samples = 400;
            }),
            method(MethodKind::BdEwc, |m| {
                m.lr = 0.02;
                m.epochs = 150;
                m.batch_size = 32;
                m.epsilon = Some(2e-3);
                m.h = Some(20);
                m.lambda = Some(200.0);
                m.fisher_samples = 400;
            }),
        ],
        classes_per_task: 2,
        train_limit: None,
        eval_limit: None,
        heatmap_resolution: 64,
        gradcheck_seeds: 50,
    }
}

/// Five 2-class tasks over the digit files, single-head, 5 hidden layers of
/// 300 relu units, 5 epochs per task.
pub fn incremental_mnist(output_dir: PathBuf, data_dir: Option<PathBuf>) -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKind::IncrementalMnist,
        n_tasks: 5,
        seeds: vec![1],
        output_dir,
        data_dir,
        net: NetConfig {
            hidden: vec![300; 5],
        },
        methods: vec![
            method(MethodKind::BdEwc, |m| {
                m.epsilon = Some(1e-3);
                m.h = Some(100);
                m.lambda = Some(2e3);
            }),
            method(MethodKind::Ewc, |m| {
                m.lambda = Some(2e3);
            }),
            method(MethodKind::Stl, |m| {
                m.epochs = 2;
            }),
        ],
        classes_per_task: 2,
        train_limit: None,
        eval_limit: None,
        heatmap_resolution: 64,
        gradcheck_seeds: 50,
    }
}

/// Permuted-image tasks on the small 4 x 128 net, three seeds. Ten tasks
/// by default; pass a larger `n_tasks` for the long-running variant.
pub fn permuted_mnist(output_dir: PathBuf, data_dir: Option<PathBuf>, n_tasks: usize) -> ExperimentConfig {
    let common = |m: &mut MethodConfig| {
        m.epochs = 2;
        m.batch_size = 64;
    };
    ExperimentConfig {
        experiment: ExperimentKind::PermutedMnist,
        n_tasks,
        seeds: vec![1, 2, 3],
        output_dir,
        data_dir,
        net: NetConfig {
            hidden: vec![128; 4],
        },
        methods: vec![
            method(MethodKind::Psp, common),
            method(MethodKind::BdPsp, |m| {
                common(m);
                m.epsilon = Some(1e-3);
                m.h = Some(100);
            }),
            method(MethodKind::Ewc, |m| {
                common(m);
                m.lambda = Some(2e3);
            }),
            method(MethodKind::BdEwc, |m| {
                common(m);
                m.epsilon = Some(1e-3);
                m.h = Some(100);
                m.lambda = Some(2e3);
            }),
        ],
        classes_per_task: 2,
        train_limit: Some(30_000),
        eval_limit: Some(2_000),
        heatmap_resolution: 64,
        gradcheck_seeds: 50,
    }
}

//! Experiment orchestration over the (method x seed) grid.
//!
//! Every cell owns its network, bias bank, penalty state, key set, and RNG
//! streams, so cells run in parallel; a numeric failure in one cell is
//! recorded without aborting its siblings. Metrics rows are buffered per
//! cell and written in canonical (method, seed) order, which makes the
//! metrics file byte-identical across reruns up to the wallclock column.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::gradcheck::{render_gradcheck, run_gradcheck};
use crate::harness::heatmap::{decision_heatmap, write_heatmap_csv, write_heatmap_pgm};
use crate::harness::metrics::{average_accuracy_curve, write_metrics, MetricsRow};
use crate::methods::{
    evaluate_for_method, train_task, EwcState, MethodConfig, MethodKind, PspKeySet,
};
use crate::net::{mlp_layers, save_checkpoint, BiasBank, NetworkState};
use crate::numerics::rng::{RngStream, StreamDomain, RNG_ALGORITHM};
use crate::tasks::{gen_clusters, load_mnist_dir, permute_tasks, split_incremental};
use crate::tasks::{Dataset, Region, Task, TaskSequence};
use crate::Real;

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub method: MethodKind,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    /// Final accuracy per task id after the whole sequence.
    pub final_accuracies: Vec<(usize, f64)>,
    /// Largest factor-vs-frozen forward difference over all consolidations.
    pub consolidation_max_diff: f64,
    /// Frozen bank entries were bit-identical at the end of the run to the
    /// moment of their consolidation.
    pub bank_integrity_ok: bool,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub metrics_path: PathBuf,
    pub cells: Vec<CellOutcome>,
}

impl RunReport {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.error.is_none())
    }

    pub fn cell(&self, method: MethodKind, seed: u64) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.seed == seed)
    }
}

/// Everything a single (method, seed) cell needs to run.
struct CellPlan {
    method: MethodConfig,
    seed: u64,
    order: usize,
}

enum DataSource {
    /// One shared task sequence for every cell.
    Fixed(Arc<TaskSequence<Real>>),
    /// Permuted-image tasks built per seed over a shared base.
    PermutedBase {
        train: Arc<Dataset<Real>>,
        test: Arc<Dataset<Real>>,
    },
    /// Seed-dependent synthetic clusters.
    Clusters,
}

fn build_source(cfg: &ExperimentConfig) -> Result<DataSource> {
    match cfg.experiment {
        ExperimentKind::IncrementalMnist => {
            let (train, test) = load_mnist_dir::<Real>(&cfg.data_dir())?;
            let seq = split_incremental(&train, &test, cfg.classes_per_task)?;
            Ok(DataSource::Fixed(Arc::new(seq)))
        }
        ExperimentKind::PermutedMnist => {
            let (train, test) = load_mnist_dir::<Real>(&cfg.data_dir())?;
            Ok(DataSource::PermutedBase {
                train: Arc::new(train),
                test: Arc::new(test),
            })
        }
        ExperimentKind::Toy2d => Ok(DataSource::Clusters),
        ExperimentKind::Gradcheck => Err(Error::InvalidInput(
            "gradcheck does not use a task source".into(),
        )),
    }
}

fn sequence_for_seed(
    cfg: &ExperimentConfig,
    source: &DataSource,
    seed: u64,
) -> Result<(Arc<TaskSequence<Real>>, Option<Region>)> {
    match source {
        DataSource::Fixed(seq) => Ok((Arc::clone(seq), None)),
        DataSource::PermutedBase { train, test } => {
            let seq = permute_tasks(Arc::clone(train), Arc::clone(test), cfg.n_tasks, seed)?;
            Ok((Arc::new(seq), None))
        }
        DataSource::Clusters => {
            let exp = gen_clusters::<Real>(seed);
            let region = exp.plot_region;
            Ok((Arc::new(exp.into_sequence()?), Some(region)))
        }
    }
}

fn prefix_dataset(ds: &Dataset<Real>, limit: usize) -> Dataset<Real> {
    let rows: Vec<usize> = (0..ds.len().min(limit)).collect();
    Dataset {
        features: ds.features.gather_rows(&rows),
        labels: rows.iter().map(|&i| ds.labels[i]).collect(),
        class_names: ds.class_names.clone(),
    }
}

fn apply_limits(task: &Task<Real>, train_limit: Option<usize>, eval_limit: Option<usize>) -> Task<Real> {
    Task {
        task_id: task.task_id,
        train: match train_limit {
            Some(l) => prefix_dataset(&task.train, l),
            None => task.train.clone(),
        },
        test: match eval_limit {
            Some(l) => prefix_dataset(&task.test, l),
            None => task.test.clone(),
        },
        global_class_ids: task.global_class_ids.clone(),
        head_dim: task.head_dim,
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    source: &DataSource,
    plan: &CellPlan,
) -> Result<CellOutcome> {
    let kind = plan.method.kind;
    let seed = plan.method.seed.unwrap_or(plan.seed);
    let method_name = kind.to_string();
    let started = Instant::now();

    let (seq, region) = sequence_for_seed(cfg, source, seed)?;
    let n_tasks = cfg.n_tasks.min(seq.len());
    let head_mode = seq.head_mode();
    let input_dim = seq.task(0).train.features.cols();
    let output_dim = seq.total_classes();
    let layers = mlp_layers(input_dim, &cfg.net.hidden, output_dim);

    let mut init_rng = RngStream::for_domain(seed, StreamDomain::WeightInit, 0, 0);
    let mut net = NetworkState::<Real>::init_uniform(layers.clone(), &mut init_rng)?;
    let mut bank = BiasBank::new();
    let lambda = plan.method.lambda.unwrap_or(0.0);
    let mut ewc = EwcState::new(&net, lambda as Real);
    let mut keys = PspKeySet::new(seed);

    let mut rows = Vec::new();
    let mut stl_nets: Vec<NetworkState<Real>> = Vec::new();
    let mut consolidation_max: f64 = 0.0;
    let mut bank_snapshots: Vec<(usize, Vec<u8>)> = Vec::new();

    for t in 0..n_tasks {
        let full_task = seq.task(t);
        let task = apply_limits(&full_task, cfg.train_limit, cfg.eval_limit);
        if kind.fresh_net_per_task() && t > 0 {
            let mut rng = RngStream::for_domain(seed, StreamDomain::WeightInit, t as u64, 0);
            net = NetworkState::init_uniform(layers.clone(), &mut rng)?;
        }

        let outcome = train_task(
            &plan.method,
            &mut net,
            &mut bank,
            &mut ewc,
            &mut keys,
            &task,
            head_mode,
            seed,
        )?;
        for stats in &outcome.epoch_log {
            rows.push(MetricsRow {
                method: method_name.clone(),
                seed,
                trained_through_task: t + 1,
                eval_task: 0,
                epoch: stats.epoch,
                accuracy: stats.train_accuracy,
                loss: stats.mean_loss,
                wallclock_ms: started.elapsed().as_millis(),
            });
        }
        if let Some(check) = outcome.consolidation {
            consolidation_max = consolidation_max.max(check.max_abs_diff);
            let entry = bank.get(task.task_id).expect("consolidated entry present");
            bank_snapshots.push((task.task_id, entry.to_bytes()));
        }
        if kind.fresh_net_per_task() {
            stl_nets.push(net.clone());
        }

        for j in 0..=t {
            let eval_full = seq.task(j);
            let eval_task = apply_limits(&eval_full, None, cfg.eval_limit);
            let eval_net = if kind.fresh_net_per_task() {
                &stl_nets[j]
            } else {
                &net
            };
            let report =
                evaluate_for_method(kind, eval_net, &bank, &keys, &eval_task, head_mode)?;
            rows.push(MetricsRow {
                method: method_name.clone(),
                seed,
                trained_through_task: t + 1,
                eval_task: eval_task.task_id,
                epoch: plan.method.epochs,
                accuracy: report.accuracy,
                loss: report.mean_loss,
                wallclock_ms: started.elapsed().as_millis(),
            });
        }
    }

    let bank_integrity_ok = bank_snapshots
        .iter()
        .all(|(id, bytes)| bank.get(*id).map(|e| e.to_bytes()) == Some(bytes.clone()));

    // persist the final model(s)
    if kind.fresh_net_per_task() {
        for (t, stl_net) in stl_nets.iter().enumerate() {
            let path = cfg
                .output_dir
                .join(format!("checkpoint_{method_name}_{seed}_task{}.bpn", t + 1));
            save_checkpoint(&path, stl_net, &BiasBank::<Real>::new())?;
        }
    } else {
        let path = cfg
            .output_dir
            .join(format!("checkpoint_{method_name}_{seed}.bpn"));
        save_checkpoint(&path, &net, &bank)?;
    }

    // decision surfaces for the 2-D experiment, task-1 view
    if let Some(region) = region {
        let bias = bank.get(1);
        let task_keys = if kind.uses_keys() { keys.get(1) } else { None };
        let grid = decision_heatmap(&net, bias, task_keys, region, cfg.heatmap_resolution)?;
        let base = cfg
            .output_dir
            .join(format!("heatmap_{method_name}_{seed}_task1"));
        write_heatmap_pgm(&base.with_extension("pgm"), &grid)?;
        write_heatmap_csv(&base.with_extension("csv"), &grid)?;
    }

    let final_accuracies = rows
        .iter()
        .filter(|r| r.trained_through_task == n_tasks && r.eval_task >= 1)
        .map(|r| (r.eval_task, r.accuracy))
        .collect();

    Ok(CellOutcome {
        method: kind,
        seed,
        rows,
        final_accuracies,
        consolidation_max_diff: consolidation_max,
        bank_integrity_ok,
        error: None,
    })
}

fn write_summary(cfg: &ExperimentConfig, cells: &[CellOutcome]) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "experiment: {}", cfg.experiment);
    let _ = writeln!(out, "rng: {RNG_ALGORITHM}, seeds {:?}", cfg.seeds);
    for cell in cells {
        let _ = writeln!(out, "\n[{} seed {}]", cell.method, cell.seed);
        if let Some(err) = &cell.error {
            let _ = writeln!(out, "  FAILED: {err}");
            continue;
        }
        let _ = writeln!(out, "  final per-task accuracy:");
        for (task, acc) in &cell.final_accuracies {
            let _ = writeln!(out, "    task {task}: {acc:.4}");
        }
        let curve = average_accuracy_curve(&cell.rows, &cell.method.to_string(), cell.seed);
        let curve_str: Vec<String> = curve.iter().map(|a| format!("{a:.4}")).collect();
        let _ = writeln!(out, "  avg accuracy over trained tasks: {}", curve_str.join(" "));
        if cell.consolidation_max_diff > 0.0 {
            let _ = writeln!(
                out,
                "  consolidation max |diff|: {:.3e}",
                cell.consolidation_max_diff
            );
        }
    }
    fs::write(cfg.output_dir.join("summary.txt"), out)?;
    Ok(())
}

/// Runs the whole configured grid. Always writes `metrics.csv`,
/// `summary.txt`, and the resolved config echo; per-cell failures are
/// recorded in the report (and `failures.txt`) without stopping other
/// cells.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("resolved_config.toml"), cfg.resolved_toml())?;

    if cfg.experiment == ExperimentKind::Gradcheck {
        let report = run_gradcheck(cfg.gradcheck_seeds, 1e-4);
        let text = render_gradcheck(&report);
        fs::write(cfg.output_dir.join("gradcheck.txt"), &text)?;
        if !report.passed() {
            return Err(Error::Numeric(format!(
                "gradient check failed: max rel err {:.3e}",
                report.max_rel_err
            )));
        }
        return Ok(RunReport {
            output_dir: cfg.output_dir.clone(),
            metrics_path: cfg.output_dir.join("gradcheck.txt"),
            cells: Vec::new(),
        });
    }

    let source = build_source(cfg)?;
    let mut plans = Vec::new();
    for method in &cfg.methods {
        for &seed in &cfg.seeds {
            plans.push(CellPlan {
                method: method.clone(),
                seed,
                order: plans.len(),
            });
        }
    }

    let mut cells: Vec<(usize, CellOutcome)> = plans
        .par_iter()
        .map(|plan| {
            let outcome = run_cell(cfg, &source, plan).unwrap_or_else(|e| CellOutcome {
                method: plan.method.kind,
                seed: plan.method.seed.unwrap_or(plan.seed),
                rows: Vec::new(),
                final_accuracies: Vec::new(),
                consolidation_max_diff: 0.0,
                bank_integrity_ok: true,
                error: Some(e.to_string()),
            });
            (plan.order, outcome)
        })
        .collect();
    cells.sort_by_key(|(order, _)| *order);
    let cells: Vec<CellOutcome> = cells.into_iter().map(|(_, c)| c).collect();

    let all_rows: Vec<MetricsRow> = cells.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    let metrics_path = cfg.output_dir.join("metrics.csv");
    write_metrics(&metrics_path, &all_rows)?;
    write_summary(cfg, &cells)?;

    let failures: Vec<String> = cells
        .iter()
        .filter_map(|c| {
            c.error
                .as_ref()
                .map(|e| format!("{} seed {}: {e}", c.method, c.seed))
        })
        .collect();
    if !failures.is_empty() {
        fs::write(cfg.output_dir.join("failures.txt"), failures.join("\n"))?;
    }

    Ok(RunReport {
        output_dir: cfg.output_dir.clone(),
        metrics_path,
        cells,
    })
}

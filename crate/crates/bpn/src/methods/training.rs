//! The per-task training loop and task-oracle evaluation.
//!
//! One call to [`train_task`] runs the full epoch x minibatch loop for one
//! task under one method: forward -> softmax cross entropy -> backward ->
//! parameter steps. Bias-unit kinds additionally step their factors each
//! minibatch and consolidate them into the frozen bank at the end; EWC
//! kinds estimate the task's Fisher diagonal afterwards and fold it into
//! the running constraint state.

use crate::error::{Error, Result};
use crate::net::{
    backward, consolidate_bias, forward, BiasFactors, BiasBank, BiasSource, NetworkState,
    TaskBias, TaskKeys,
};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::{RngStream, StreamDomain};
use crate::numerics::{softmax_rows, softmax_xent};
use crate::scalar::Scalar;
use crate::tasks::{HeadMode, Task};

use super::ewc::{estimate_fisher, EwcState};
use super::psp::PspKeySet;
use super::{MethodConfig, MethodKind};

#[derive(Clone, Copy, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean minimized objective over the epoch's minibatches (data loss
    /// plus the quadratic penalty when active).
    pub mean_loss: f64,
    /// Fraction of training examples classified correctly during the epoch.
    pub train_accuracy: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ConsolidationCheck {
    /// Largest |logit difference| between the factor forward and the frozen
    /// forward on a held-out probe batch.
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub task_id: usize,
    pub epoch_log: Vec<EpochStats>,
    pub consolidation: Option<ConsolidationCheck>,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
}

/// How training and evaluation map task labels onto the logit layer.
struct LossView {
    /// Per-example target within the softmax (global id, or position
    /// within `columns` when restricted).
    labels: Vec<usize>,
    /// Logit columns the softmax runs over; `None` = the full layer.
    columns: Option<Vec<usize>>,
}

fn loss_view<T: Scalar>(task: &Task<T>, train: bool, head_mode: HeadMode, masked: bool) -> LossView {
    let ds = if train { &task.train } else { &task.test };
    match head_mode {
        HeadMode::SingleHead if !masked => LossView {
            labels: ds.labels.iter().map(|&l| task.global_class_ids[l]).collect(),
            columns: None,
        },
        _ => LossView {
            labels: ds.labels.clone(),
            columns: Some(task.global_class_ids.clone()),
        },
    }
}

/// Loss, full-width dlogits, and correct-prediction count for one batch.
fn batch_loss_grad<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
    columns: Option<&[usize]>,
) -> Result<(T, Matrix<T>, usize)> {
    match columns {
        None => {
            let (loss, dlogits) = softmax_xent(logits, labels)?;
            let correct = count_correct(logits, labels);
            Ok((loss, dlogits, correct))
        }
        Some(cols) => {
            let restricted = logits.gather_cols(cols);
            let (loss, small) = softmax_xent(&restricted, labels)?;
            let mut full = Matrix::zeros(logits.rows(), logits.cols());
            for r in 0..small.rows() {
                let src = small.row(r);
                let dst = full.row_mut(r);
                for (j, &c) in cols.iter().enumerate() {
                    dst[c] = src[j];
                }
            }
            let correct = count_correct(&restricted, labels);
            Ok((loss, full, correct))
        }
    }
}

fn count_correct<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> usize {
    (0..logits.rows())
        .filter(|&r| argmax(logits.row(r)) == labels[r])
        .count()
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

struct FactorState<T> {
    factors: BiasFactors<T>,
}

#[allow(clippy::too_many_arguments)]
pub fn train_task<T: Scalar>(
    cfg: &MethodConfig,
    net: &mut NetworkState<T>,
    bank: &mut BiasBank<T>,
    ewc: &mut EwcState<T>,
    keys: &mut PspKeySet<T>,
    task: &Task<T>,
    head_mode: HeadMode,
    seed: u64,
) -> Result<TrainOutcome> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let kind = cfg.kind;
    if kind.uses_factors() && bank.contains(task.task_id) {
        return Err(Error::DuplicateTask(task.task_id));
    }
    if task.train.is_empty() {
        return Err(Error::InvalidInput(format!("task {} has no training data", task.task_id)));
    }

    let lr = T::from_f64_lossy(cfg.lr);
    let lr_wt = T::from_f64_lossy(cfg.lr_wt);
    let epsilon = T::from_f64_lossy(cfg.epsilon.unwrap_or(0.0));

    let mut factor_state: Option<FactorState<T>> = if kind.uses_factors() {
        let mut frng =
            RngStream::for_domain(seed, StreamDomain::FactorInit, task.task_id as u64, 0);
        Some(FactorState {
            factors: BiasFactors::init(net, cfg.h.unwrap(), task.task_id, &mut frng)?,
        })
    } else {
        None
    };

    if kind.uses_keys() {
        keys.ensure(net.layers(), task.task_id);
    }
    let task_keys: Option<TaskKeys<T>> = if kind.uses_keys() {
        keys.get(task.task_id).cloned()
    } else {
        None
    };

    let view = loss_view(task, true, head_mode, cfg.masked_single_head);
    let n = task.train.len();
    let batch_size = cfg.batch_size.min(n);
    let mut shuffle_rng =
        RngStream::for_domain(seed, StreamDomain::Shuffle, task.task_id as u64, 0);
    let mut order: Vec<usize> = (0..n).collect();

    let mut epoch_log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut correct = 0usize;
        for chunk in order.chunks(batch_size) {
            let x = task.train.features.gather_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| view.labels[i]).collect();

            let bias_src = match &factor_state {
                Some(fs) => BiasSource::Factors(&fs.factors),
                None => BiasSource::None,
            };
            let (logits, trace) = forward(net, bias_src, task_keys.as_ref(), &x)?;
            let (data_loss, dlogits, batch_correct) =
                batch_loss_grad(&logits, &labels, view.columns.as_deref())?;
            let mut grads = backward(net, bias_src, task_keys.as_ref(), &trace, &dlogits)?;

            let mut objective = data_loss.to_f64_lossy();
            if kind.uses_ewc() && ewc.is_active() {
                let (penalty, pgrad) = ewc.penalty(net)?;
                objective += penalty.to_f64_lossy();
                for (g, p) in grads.dw.iter_mut().zip(&pgrad.dw) {
                    g.add_assign(p)?;
                }
                for (g, p) in grads.db.iter_mut().zip(&pgrad.db) {
                    for (a, &b) in g.iter_mut().zip(p) {
                        *a += b;
                    }
                }
            }
            if !objective.is_finite() {
                return Err(Error::Numeric(format!(
                    "loss became non-finite at epoch {epoch} of task {}",
                    task.task_id
                )));
            }

            let with_epoch = |e: Error| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("{msg} (epoch {epoch}, task {})", task.task_id))
                }
                other => other,
            };
            net.apply_sgd_step(&grads, lr).map_err(with_epoch)?;
            if let Some(fs) = factor_state.as_mut() {
                if kind.sign_step_on_m() {
                    fs.factors.apply_fgsd_step(&grads, epsilon, lr_wt)?;
                } else {
                    fs.factors.apply_gd_step(&grads, lr, lr_wt)?;
                }
            }

            loss_sum += objective;
            batches += 1;
            correct += batch_correct;
        }
        epoch_log.push(EpochStats {
            epoch,
            mean_loss: loss_sum / batches as f64,
            train_accuracy: correct as f64 / n as f64,
        });
    }

    let mut consolidation = None;
    if let Some(fs) = factor_state.take() {
        // Value-preservation probe on held-out data, then freeze.
        let probe_rows: Vec<usize> = (0..task.test.len().min(256)).collect();
        let probe = task.test.features.gather_rows(&probe_rows);
        let (before, _) = forward(net, BiasSource::Factors(&fs.factors), task_keys.as_ref(), &probe)?;
        let frozen = consolidate_bias(fs.factors);
        let (after, _) = forward(net, BiasSource::Frozen(&frozen), task_keys.as_ref(), &probe)?;
        consolidation = Some(ConsolidationCheck {
            max_abs_diff: before.max_abs_diff(&after),
        });
        bank.insert(frozen)?;
    }

    if kind.uses_ewc() {
        let bias_src = if kind.uses_factors() {
            BiasSource::Frozen(bank.require(task.task_id)?)
        } else {
            BiasSource::None
        };
        let mut fisher_rng =
            RngStream::for_domain(seed, StreamDomain::Fisher, task.task_id as u64, 0);
        let n_samples = cfg.fisher_samples.min(n);
        let labels: Vec<usize> = if cfg.fisher_sampled_labels {
            sample_model_labels(
                net,
                bias_src,
                task_keys.as_ref(),
                &task.train.features,
                view.columns.as_deref(),
                &mut fisher_rng,
            )?
        } else {
            view.labels.clone()
        };
        let fisher = estimate_fisher(
            net,
            bias_src,
            task_keys.as_ref(),
            &task.train.features,
            &labels,
            view.columns.as_deref(),
            n_samples,
            &mut fisher_rng,
        )?;
        ewc.absorb_task(&fisher, net)?;
    }

    Ok(TrainOutcome {
        task_id: task.task_id,
        epoch_log,
        consolidation,
    })
}

/// Labels drawn from the model's own softmax, for the sampled-label Fisher
/// variant.
fn sample_model_labels<T: Scalar>(
    net: &NetworkState<T>,
    bias: BiasSource<'_, T>,
    keys: Option<&TaskKeys<T>>,
    features: &Matrix<T>,
    columns: Option<&[usize]>,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let mut labels = Vec::with_capacity(features.rows());
    for chunk_start in (0..features.rows()).step_by(512) {
        let rows: Vec<usize> = (chunk_start..(chunk_start + 512).min(features.rows())).collect();
        let x = features.gather_rows(&rows);
        let (logits, _) = forward(net, bias, keys, &x)?;
        let logits = match columns {
            Some(cols) => logits.gather_cols(cols),
            None => logits,
        };
        let probs = softmax_rows(&logits);
        for r in 0..probs.rows() {
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut drawn = probs.cols() - 1;
            for (j, &p) in probs.row(r).iter().enumerate() {
                acc += p.to_f64_lossy();
                if u < acc {
                    drawn = j;
                    break;
                }
            }
            labels.push(drawn);
        }
    }
    Ok(labels)
}

fn eval_core<T: Scalar>(
    net: &NetworkState<T>,
    bias: Option<&TaskBias<T>>,
    keys: Option<&TaskKeys<T>>,
    task: &Task<T>,
    head_mode: HeadMode,
) -> Result<EvalReport> {
    let view = loss_view(task, false, head_mode, false);
    let n = task.test.len();
    if n == 0 {
        return Err(Error::InvalidInput(format!("task {} has no test data", task.task_id)));
    }
    let mut correct = 0usize;
    let mut loss_sum = 0.0;
    for chunk_start in (0..n).step_by(512) {
        let rows: Vec<usize> = (chunk_start..(chunk_start + 512).min(n)).collect();
        let x = task.test.features.gather_rows(&rows);
        let labels: Vec<usize> = rows.iter().map(|&i| view.labels[i]).collect();
        let bias_src = match bias {
            Some(b) => BiasSource::Frozen(b),
            None => BiasSource::None,
        };
        let (logits, _) = forward(net, bias_src, keys, &x)?;
        let (loss, _, batch_correct) =
            batch_loss_grad(&logits, &labels, view.columns.as_deref())?;
        correct += batch_correct;
        loss_sum += loss.to_f64_lossy() * rows.len() as f64;
    }
    Ok(EvalReport {
        accuracy: correct as f64 / n as f64,
        mean_loss: loss_sum / n as f64,
    })
}

/// Task-oracle evaluation: selects the task's own bank entry and keys for
/// the given method kind, rejecting missing state with an unknown-task
/// error. Pure in all inputs.
pub fn evaluate_for_method<T: Scalar>(
    kind: MethodKind,
    net: &NetworkState<T>,
    bank: &BiasBank<T>,
    keys: &PspKeySet<T>,
    task: &Task<T>,
    head_mode: HeadMode,
) -> Result<EvalReport> {
    let bias = if kind.uses_factors() {
        Some(bank.require(task.task_id)?)
    } else {
        None
    };
    let task_keys = if kind.uses_keys() {
        Some(
            keys.get(task.task_id)
                .ok_or(Error::UnknownTask(task.task_id))?,
        )
    } else {
        None
    };
    if let Some(b) = bias {
        if b.task_id() != task.task_id {
            return Err(Error::UnknownTask(task.task_id));
        }
    }
    eval_core(net, bias, task_keys, task, head_mode)
}

/// Accuracy under the task oracle (the thin scalar view of
/// [`evaluate_for_method`]).
pub fn evaluate<T: Scalar>(
    kind: MethodKind,
    net: &NetworkState<T>,
    bank: &BiasBank<T>,
    keys: &PspKeySet<T>,
    task: &Task<T>,
    head_mode: HeadMode,
) -> Result<f64> {
    Ok(evaluate_for_method(kind, net, bank, keys, task, head_mode)?.accuracy)
}

/// Diagnostic-only evaluation with explicitly supplied (possibly
/// mismatched) bias vectors and keys. The normal API rejects routing a
/// task through another task's state; this probe exists to measure exactly
/// that failure mode.
pub fn wrong_key_probe<T: Scalar>(
    net: &NetworkState<T>,
    bias: Option<&TaskBias<T>>,
    keys: Option<&TaskKeys<T>>,
    task: &Task<T>,
    head_mode: HeadMode,
) -> Result<EvalReport> {
    eval_core(net, bias, keys, task, head_mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::mlp_layers;
    use crate::tasks::gen_clusters;
    use crate::tasks::Dataset;

    fn fresh_state(
        input: usize,
        hidden: &[usize],
        output: usize,
        lambda: f64,
        seed: u64,
    ) -> (NetworkState<f64>, BiasBank<f64>, EwcState<f64>, PspKeySet<f64>) {
        let mut rng = RngStream::for_domain(seed, StreamDomain::WeightInit, 0, 0);
        let net = NetworkState::init_uniform(mlp_layers(input, hidden, output), &mut rng).unwrap();
        let ewc = EwcState::new(&net, lambda);
        (net, BiasBank::new(), ewc, PspKeySet::new(seed))
    }

    fn synthetic_task(seed: u64, n_per_class: usize, classes: usize, dim: usize) -> Task<f64> {
        // well-separated blobs in [0,1]^dim: class c concentrates around
        // a corner pattern derived from c's bits
        let mut rng = RngStream::for_domain(seed, StreamDomain::Data, 1, 0);
        let make = |n: usize, rng: &mut RngStream| {
            let total = n * classes;
            let mut features = Matrix::zeros(total, dim);
            let mut labels = Vec::with_capacity(total);
            for i in 0..total {
                let c = i % classes;
                for j in 0..dim {
                    let base = if (c >> (j % 8)) & 1 == 1 { 0.8 } else { 0.2 };
                    features.set(i, j, (base + 0.05 * rng.normal()).clamp(0.0, 1.0));
                }
                labels.push(c);
            }
            Dataset::new(features, labels).unwrap()
        };
        Task {
            task_id: 1,
            train: make(n_per_class, &mut rng),
            test: make(n_per_class / 2, &mut rng),
            global_class_ids: (0..classes).collect(),
            head_dim: classes,
        }
    }

    #[test]
    fn toy_clusters_reach_high_training_accuracy_for_every_kind() {
        let exp = gen_clusters::<f64>(3);
        for kind in [MethodKind::Sgd, MethodKind::Ewc, MethodKind::Psp, MethodKind::BdEwc] {
            let (mut net, mut bank, mut ewc, mut keys) = fresh_state(2, &[16], 2, 2e3, 40);
            let mut cfg = MethodConfig::new(kind);
            cfg.epochs = 5;
            cfg.lr = 0.5;
            cfg.batch_size = 32;
            let out = train_task(
                &cfg,
                &mut net,
                &mut bank,
                &mut ewc,
                &mut keys,
                &exp.task1,
                HeadMode::MultiHead,
                40,
            )
            .unwrap();
            let last = out.epoch_log.last().unwrap();
            assert!(
                last.train_accuracy >= 0.99,
                "{kind}: train accuracy {:.3} after {} epochs",
                last.train_accuracy,
                cfg.epochs
            );
        }
    }

    #[test]
    fn first_task_ewc_trajectory_equals_sgd() {
        let task = synthetic_task(1, 30, 4, 6);
        let (mut net_sgd, mut bank1, mut ewc1, mut keys1) = fresh_state(6, &[8], 4, 2e3, 7);
        let (mut net_ewc, mut bank2, mut ewc2, mut keys2) = fresh_state(6, &[8], 4, 2e3, 7);

        let sgd = MethodConfig::new(MethodKind::Sgd);
        let ewc_cfg = MethodConfig::new(MethodKind::Ewc);
        train_task(&sgd, &mut net_sgd, &mut bank1, &mut ewc1, &mut keys1, &task,
            HeadMode::MultiHead, 7).unwrap();
        train_task(&ewc_cfg, &mut net_ewc, &mut bank2, &mut ewc2, &mut keys2, &task,
            HeadMode::MultiHead, 7).unwrap();

        for i in 0..net_sgd.n_layers() {
            assert_eq!(net_sgd.weight(i).max_abs_diff(net_ewc.weight(i)), 0.0);
        }
        assert!(ewc2.is_active() && !ewc1.is_active());
    }

    #[test]
    fn first_epoch_weights_match_between_sgd_and_bd_ewc_full_batch() {
        // With the whole task in one minibatch, epoch 1 is a single step in
        // which the factor bias contribution is exactly zero (M starts at
        // zero), so the weight trajectories coincide.
        let task = synthetic_task(2, 20, 4, 6);
        let (mut net_sgd, mut bank1, mut ewc1, mut keys1) = fresh_state(6, &[8], 4, 2e3, 9);
        let (mut net_bd, mut bank2, mut ewc2, mut keys2) = fresh_state(6, &[8], 4, 2e3, 9);

        let mut sgd = MethodConfig::new(MethodKind::Sgd);
        sgd.epochs = 1;
        sgd.batch_size = task.train.len();
        let mut bd = MethodConfig::new(MethodKind::BdEwc);
        bd.epochs = 1;
        bd.batch_size = task.train.len();

        train_task(&sgd, &mut net_sgd, &mut bank1, &mut ewc1, &mut keys1, &task,
            HeadMode::MultiHead, 9).unwrap();
        train_task(&bd, &mut net_bd, &mut bank2, &mut ewc2, &mut keys2, &task,
            HeadMode::MultiHead, 9).unwrap();

        for i in 0..net_sgd.n_layers() {
            assert_eq!(net_sgd.weight(i).max_abs_diff(net_bd.weight(i)), 0.0);
            for (a, b) in net_sgd.bias(i).iter().zip(net_bd.bias(i)) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn duplicate_task_is_rejected_for_bias_kinds() {
        let task = synthetic_task(3, 10, 2, 4);
        let (mut net, mut bank, mut ewc, mut keys) = fresh_state(4, &[6], 2, 2e3, 11);
        let mut cfg = MethodConfig::new(MethodKind::BdEwc);
        cfg.epochs = 1;
        train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task,
            HeadMode::MultiHead, 11).unwrap();
        let err = train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task,
            HeadMode::MultiHead, 11);
        assert!(matches!(err, Err(Error::DuplicateTask(1))));
    }

    #[test]
    fn exploding_loss_reports_a_numeric_error_with_epoch() {
        // Identical inputs with contradictory labels keep the gradient away
        // from zero, so an absurd learning rate must overflow the weights.
        let ds = || {
            Dataset::new(Matrix::from_fn(2, 4, |_, _| 0.5), vec![0, 1]).unwrap()
        };
        let task = Task {
            task_id: 1,
            train: ds(),
            test: ds(),
            global_class_ids: vec![0, 1],
            head_dim: 2,
        };
        // Linear hidden layer so magnitudes compound multiplicatively
        // instead of being clamped by relu dead zones.
        let layers = vec![
            crate::net::LayerSpec {
                in_dim: 4,
                out_dim: 8,
                activation: crate::net::Activation::Linear,
            },
            crate::net::LayerSpec {
                in_dim: 8,
                out_dim: 2,
                activation: crate::net::Activation::SoftmaxOutput,
            },
        ];
        let mut rng = RngStream::for_domain(13, StreamDomain::WeightInit, 0, 0);
        let mut net = NetworkState::<f64>::init_uniform(layers, &mut rng).unwrap();
        let (_, mut bank, mut ewc, mut keys) = fresh_state(4, &[8], 2, 2e3, 13);
        let mut cfg = MethodConfig::new(MethodKind::Sgd);
        cfg.lr = 1e150; // overflow to inf/NaN by construction
        cfg.epochs = 10;
        let err = train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task,
            HeadMode::MultiHead, 13).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epoch"), "{msg}");
    }

    #[test]
    fn consolidation_check_is_tiny_and_bank_is_populated() {
        let task = synthetic_task(5, 20, 2, 4);
        let (mut net, mut bank, mut ewc, mut keys) = fresh_state(4, &[8], 2, 2e3, 17);
        let mut cfg = MethodConfig::new(MethodKind::BdEwc);
        cfg.epochs = 2;
        let out = train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task,
            HeadMode::MultiHead, 17).unwrap();
        assert!(out.consolidation.unwrap().max_abs_diff <= 1e-6);
        assert!(bank.contains(1));
    }

    #[test]
    fn untrained_balanced_ten_way_eval_sits_at_chance() {
        let mut task = synthetic_task(6, 40, 10, 12);
        // uniform random features so no class is linearly favored
        let mut rng = RngStream::for_domain(99, StreamDomain::Data, 7, 0);
        for v in task.test.features.data_mut() {
            *v = rng.uniform();
        }
        let (net, bank, _, keys) = fresh_state(12, &[16], 10, 2e3, 19);
        let acc = evaluate(MethodKind::Sgd, &net, &bank, &keys, &task, HeadMode::SingleHead)
            .unwrap();
        assert!((acc - 0.1).abs() <= 0.03, "chance-level accuracy was {acc}");
    }

    #[test]
    fn evaluate_is_pure_and_repeatable() {
        let task = synthetic_task(7, 15, 3, 5);
        let (net, bank, _, keys) = fresh_state(5, &[6], 3, 2e3, 23);
        let a = evaluate(MethodKind::Sgd, &net, &bank, &keys, &task, HeadMode::MultiHead).unwrap();
        let b = evaluate(MethodKind::Sgd, &net, &bank, &keys, &task, HeadMode::MultiHead).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_bank_entry_is_an_unknown_task() {
        let task = synthetic_task(8, 10, 2, 4);
        let (net, bank, _, keys) = fresh_state(4, &[4], 2, 2e3, 29);
        let err = evaluate(MethodKind::BdEwc, &net, &bank, &keys, &task, HeadMode::MultiHead);
        assert!(matches!(err, Err(Error::UnknownTask(1))));
    }

    #[test]
    fn wrong_key_probe_allows_cross_task_routing() {
        let task = synthetic_task(9, 10, 2, 4);
        let (mut net, mut bank, mut ewc, mut keys) = fresh_state(4, &[4], 2, 2e3, 31);
        let mut cfg = MethodConfig::new(MethodKind::BdEwc);
        cfg.epochs = 1;
        train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task,
            HeadMode::MultiHead, 31).unwrap();
        // probing task 1 with a fabricated "task 2" bias works only through
        // the diagnostic entry point
        let stray = TaskBias::new(
            2,
            net.layers().iter().map(|l| vec![0.25; l.out_dim]).collect(),
        );
        let report =
            wrong_key_probe(&net, Some(&stray), None, &task, HeadMode::MultiHead).unwrap();
        assert!(report.accuracy >= 0.0 && report.accuracy <= 1.0);
    }

    #[test]
    fn frozen_bank_entries_survive_later_training_bit_for_bit() {
        let task1 = synthetic_task(10, 20, 2, 4);
        let mut task2 = synthetic_task(11, 20, 2, 4);
        task2.task_id = 2;
        let (mut net, mut bank, mut ewc, mut keys) = fresh_state(4, &[8], 2, 2e3, 37);
        let mut cfg = MethodConfig::new(MethodKind::BdEwc);
        cfg.epochs = 2;
        train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task1,
            HeadMode::MultiHead, 37).unwrap();
        let snapshot = bank.get(1).unwrap().to_bytes();
        train_task(&cfg, &mut net, &mut bank, &mut ewc, &mut keys, &task2,
            HeadMode::MultiHead, 37).unwrap();
        assert_eq!(bank.get(1).unwrap().to_bytes(), snapshot);
    }
}

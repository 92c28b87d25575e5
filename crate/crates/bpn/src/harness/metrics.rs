//! Append-only metrics rows and their CSV form.
//!
//! One row per observation. Evaluation rows carry `eval_task >= 1`; rows
//! with `eval_task = 0` are per-epoch training diagnostics (loss/accuracy
//! on the training stream itself). The `wallclock_ms` column is the only
//! non-deterministic field and is excluded from byte-level comparisons.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str =
    "method,seed,trained_through_task,eval_task,epoch,accuracy,loss,wallclock_ms";

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub seed: u64,
    pub trained_through_task: usize,
    /// 0 for training-progress rows, task id for evaluation rows.
    pub eval_task: usize,
    pub epoch: usize,
    pub accuracy: f64,
    pub loss: f64,
    pub wallclock_ms: u128,
}

impl MetricsRow {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            self.trained_through_task,
            self.eval_task,
            self.epoch,
            self.accuracy,
            self.loss,
            self.wallclock_ms
        )
    }
}

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48 + METRICS_HEADER.len() + 1);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, metrics_to_csv(rows))?;
    Ok(())
}

pub fn parse_metrics(contents: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = contents.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "bad metrics header: {other:?}, expected {METRICS_HEADER:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!(
                "metrics line {}: {} fields",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Format(format!("metrics line {}: bad {what}", lineno + 2));
        rows.push(MetricsRow {
            method: fields[0].to_string(),
            seed: fields[1].parse().map_err(|_| bad("seed"))?,
            trained_through_task: fields[2].parse().map_err(|_| bad("trained_through_task"))?,
            eval_task: fields[3].parse().map_err(|_| bad("eval_task"))?,
            epoch: fields[4].parse().map_err(|_| bad("epoch"))?,
            accuracy: fields[5].parse().map_err(|_| bad("accuracy"))?,
            loss: fields[6].parse().map_err(|_| bad("loss"))?,
            wallclock_ms: fields[7].parse().map_err(|_| bad("wallclock_ms"))?,
        });
    }
    Ok(rows)
}

/// Drops the wallclock column from a metrics CSV, for determinism checks.
pub fn strip_wallclock(contents: &str) -> String {
    contents
        .lines()
        .map(|line| match line.rfind(',') {
            Some(idx) => &line[..idx],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Average accuracy over all tasks trained so far, per checkpoint in the
/// sequence, recomputed from raw evaluation rows (eval rows only, at the
/// final epoch of each task).
pub fn average_accuracy_curve(rows: &[MetricsRow], method: &str, seed: u64) -> Vec<f64> {
    let mut curve = Vec::new();
    let mut through = 1;
    loop {
        let evals: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| {
                r.method == method
                    && r.seed == seed
                    && r.trained_through_task == through
                    && r.eval_task >= 1
            })
            .collect();
        if evals.is_empty() {
            break;
        }
        curve.push(evals.iter().map(|r| r.accuracy).sum::<f64>() / evals.len() as f64);
        through += 1;
    }
    curve
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<MetricsRow> {
        vec![
            MetricsRow {
                method: "SGD".into(),
                seed: 1,
                trained_through_task: 1,
                eval_task: 1,
                epoch: 5,
                accuracy: 0.975,
                loss: 0.125,
                wallclock_ms: 321,
            },
            MetricsRow {
                method: "SGD".into(),
                seed: 1,
                trained_through_task: 2,
                eval_task: 1,
                epoch: 5,
                accuracy: 0.5,
                loss: 1.0,
                wallclock_ms: 654,
            },
            MetricsRow {
                method: "SGD".into(),
                seed: 1,
                trained_through_task: 2,
                eval_task: 2,
                epoch: 5,
                accuracy: 0.9,
                loss: 0.2,
                wallclock_ms: 655,
            },
        ]
    }

    #[test]
    fn csv_roundtrip_preserves_rows() {
        let rows = sample_rows();
        let csv = metrics_to_csv(&rows);
        assert!(csv.starts_with(METRICS_HEADER));
        let parsed = parse_metrics(&csv).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn wallclock_strip_removes_only_the_last_column() {
        let csv = metrics_to_csv(&sample_rows());
        let stripped = strip_wallclock(&csv);
        assert!(stripped.lines().next().unwrap().ends_with(",loss"));
        assert!(stripped.lines().nth(1).unwrap().ends_with(",0.125"));
        assert!(!stripped.contains("321"));
    }

    #[test]
    fn average_curve_is_recomputable_from_rows() {
        let curve = average_accuracy_curve(&sample_rows(), "SGD", 1);
        assert_eq!(curve.len(), 2);
        assert!((curve[0] - 0.975).abs() < 1e-12);
        assert!((curve[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_metrics("nope\n1,2,3").is_err());
    }
}

//! Decision-surface heatmaps for 2-D networks.
//!
//! The grid holds `P(class 0)` — the probability assigned to the first
//! class ("black" in the cluster experiment) — evaluated at cell centers.
//! Row `r`, column `c` maps to `y = y_min + (r + 0.5) dy`,
//! `x = x_min + (c + 0.5) dx`; the CSV and the PGM share this orientation
//! (row 0 at `y_min`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{forward, BiasSource, NetworkState, TaskBias, TaskKeys};
use crate::numerics::matrix::Matrix;
use crate::numerics::softmax_rows;
use crate::scalar::Scalar;
use crate::tasks::Region;

/// Evaluates `P(class 0)` over a `resolution x resolution` grid.
pub fn decision_heatmap<T: Scalar>(
    net: &NetworkState<T>,
    bias: Option<&TaskBias<T>>,
    keys: Option<&TaskKeys<T>>,
    region: Region,
    resolution: usize,
) -> Result<Matrix<T>> {
    if net.input_dim() != 2 {
        return Err(Error::InvalidInput(format!(
            "heatmaps need a 2-D input network, got input_dim {}",
            net.input_dim()
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("heatmap resolution must be >= 1".into()));
    }
    let dx = (region.x_max - region.x_min) / resolution as f64;
    let dy = (region.y_max - region.y_min) / resolution as f64;

    let mut grid = Matrix::zeros(resolution, resolution);
    for r in 0..resolution {
        let y = region.y_min + (r as f64 + 0.5) * dy;
        let mut points = Matrix::zeros(resolution, 2);
        for c in 0..resolution {
            let x = region.x_min + (c as f64 + 0.5) * dx;
            points.set(c, 0, T::from_f64_lossy(x));
            points.set(c, 1, T::from_f64_lossy(y));
        }
        let bias_src = match bias {
            Some(b) => BiasSource::Frozen(b),
            None => BiasSource::None,
        };
        let (logits, _) = forward(net, bias_src, keys, &points)?;
        let probs = softmax_rows(&logits);
        for c in 0..resolution {
            grid.set(r, c, probs.get(c, 0));
        }
    }
    Ok(grid)
}

/// Binary PGM (P5, maxval 255); gray value is `round(p * 255)`.
pub fn write_heatmap_pgm<T: Scalar>(path: &Path, grid: &Matrix<T>) -> Result<()> {
    let (rows, cols) = grid.shape();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for r in 0..rows {
        for &p in grid.row(r) {
            let v = (p.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8;
            out.push(v);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Raw probabilities, one CSV line per grid row.
pub fn write_heatmap_csv<T: Scalar>(path: &Path, grid: &Matrix<T>) -> Result<()> {
    let (rows, cols) = grid.shape();
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", grid.get(r, c));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_heatmap_csv(path: &Path) -> Result<Matrix<f64>> {
    let contents = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in contents.lines() {
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| Error::Format(format!("heatmap csv: {e}")))?);
    }
    Matrix::from_rows(&rows)
}

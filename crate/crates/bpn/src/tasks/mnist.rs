//! IDX-format loader for the MNIST files.
//!
//! Image files carry big-endian magic `0x00000803` (u8 tensor, N x 28 x 28),
//! label files `0x00000801` (u8 x N). Gzip-compressed inputs are detected by
//! the `1f 8b` magic and inflated transparently. Pixels are scaled to
//! `[0, 1]` by dividing by 255.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Scalar;

use super::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Environment variable naming the default dataset root.
pub const DATA_DIR_ENV: &str = "BPN_DATA_DIR";

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(buf: &[u8], pos: usize, what: &str) -> Result<u32> {
    if pos + 4 > buf.len() {
        return Err(Error::Format(format!("{what}: file truncated at byte {pos}")));
    }
    Ok(u32::from_be_bytes([buf[pos], buf[pos + 1], buf[pos + 2], buf[pos + 3]]))
}

fn check_magic(buf: &[u8], expected: u32, what: &str) -> Result<()> {
    let magic = be_u32(buf, 0, what)?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{what}: magic {magic:#010x}, expected {expected:#010x}"
        )));
    }
    Ok(())
}

/// Parses a pair of IDX files into a dataset.
pub fn load_mnist_idx<T: Scalar>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let images = read_maybe_gzip(images_path)?;
    check_magic(&images, IMAGES_MAGIC, "images")?;
    let n = be_u32(&images, 4, "images")? as usize;
    let rows = be_u32(&images, 8, "images")? as usize;
    let cols = be_u32(&images, 12, "images")? as usize;
    let d = rows * cols;
    let pixels = &images[16..];
    if pixels.len() != n * d {
        return Err(Error::Format(format!(
            "images: expected {} pixel bytes, found {}",
            n * d,
            pixels.len()
        )));
    }

    let labels_buf = read_maybe_gzip(labels_path)?;
    check_magic(&labels_buf, LABELS_MAGIC, "labels")?;
    let n_labels = be_u32(&labels_buf, 4, "labels")? as usize;
    let label_bytes = &labels_buf[8..];
    if label_bytes.len() != n_labels {
        return Err(Error::Format(format!(
            "labels: expected {n_labels} label bytes, found {}",
            label_bytes.len()
        )));
    }
    if n != n_labels {
        return Err(Error::Inconsistent(format!(
            "{n} images vs {n_labels} labels"
        )));
    }

    let scale = T::from_f64_lossy(1.0 / 255.0);
    let data: Vec<T> = pixels
        .iter()
        .map(|&p| T::from_usize(p as usize).unwrap() * scale)
        .collect();
    let features = Matrix::from_vec(n, d, data)?;
    let labels = label_bytes.iter().map(|&l| l as usize).collect();
    Dataset::new(features, labels)
}

/// Loads the canonical train/test pairs from a directory, accepting either
/// plain or `.gz` file names.
pub fn load_mnist_dir<T: Scalar>(dir: &Path) -> Result<(Dataset<T>, Dataset<T>)> {
    let find = |stem: &str| -> Result<PathBuf> {
        for candidate in [stem.to_string(), format!("{stem}.gz")] {
            let p = dir.join(&candidate);
            if p.exists() {
                return Ok(p);
            }
        }
        Err(Error::InvalidInput(format!(
            "missing {stem}[.gz] under {}",
            dir.display()
        )))
    };
    let train = load_mnist_idx(
        &find("train-images-idx3-ubyte")?,
        &find("train-labels-idx1-ubyte")?,
    )?;
    let test = load_mnist_idx(
        &find("t10k-images-idx3-ubyte")?,
        &find("t10k-labels-idx1-ubyte")?,
    )?;
    Ok((train, test))
}

/// Resolves the dataset root: explicit path, else `BPN_DATA_DIR`, else `./data`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var(DATA_DIR_ENV) {
        return PathBuf::from(env);
    }
    PathBuf::from("data")
}

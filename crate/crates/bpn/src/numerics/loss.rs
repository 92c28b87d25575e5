//! Softmax cross-entropy over batched logits.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::scalar::Scalar;

/// Mean negative log-likelihood and its logit gradient.
///
/// `loss = mean_b -log softmax(logits[b])[labels[b]]`,
/// `dlogits = (softmax - onehot) / B`. Row maxima are subtracted before
/// exponentiation so saturated logits stay finite.
pub fn softmax_xent<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::shape("softmax_xent", batch, labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }

    let inv_b = T::one() / T::from_usize(batch).unwrap();
    let mut dlogits = Matrix::zeros(batch, classes);
    let mut loss = T::zero();
    for b in 0..batch {
        let row = logits.row(b);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        let drow = dlogits.row_mut(b);
        for (d, &z) in drow.iter_mut().zip(row) {
            let e = (z - max).exp();
            *d = e;
            denom += e;
        }
        // -log p[label] = log denom - (z[label] - max)
        loss += denom.ln() - (row[labels[b]] - max);
        for d in drow.iter_mut() {
            *d = *d / denom * inv_b;
        }
        drow[labels[b]] -= inv_b;
    }
    loss *= inv_b;
    Ok((loss, dlogits))
}

/// Row-wise softmax probabilities (used for heatmaps and eval diagnostics).
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let (batch, classes) = logits.shape();
    let mut out = Matrix::zeros(batch, classes);
    for b in 0..batch {
        let row = logits.row(b);
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        let orow = out.row_mut(b);
        for (o, &z) in orow.iter_mut().zip(row) {
            let e = (z - max).exp();
            *o = e;
            denom += e;
        }
        for o in orow.iter_mut() {
            *o = *o / denom;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_log_c() {
        let logits = Matrix::<f64>::zeros(3, 4);
        let (loss, _) = softmax_xent(&logits, &[0, 1, 3]).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn saturated_correct_class_has_near_zero_loss() {
        let mut logits = Matrix::<f64>::zeros(1, 4);
        logits.set(0, 2, 1e3);
        let (loss, _) = softmax_xent(&logits, &[2]).unwrap();
        assert!(loss >= 0.0 && loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let logits = Matrix::<f64>::zeros(2, 3);
        assert!(softmax_xent(&logits, &[0, 3]).is_err());
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = RngStream::new(13, 0);
        let logits = Matrix::from_fn(4, 5, |_, _| rng.uniform_in(-2.0, 2.0));
        let labels = [0usize, 4, 2, 1];
        let (_, grad) = softmax_xent(&logits, &labels).unwrap();

        let h = 1e-6;
        for r in 0..4 {
            for c in 0..5 {
                let mut plus = logits.clone();
                plus.set(r, c, plus.get(r, c) + h);
                let mut minus = logits.clone();
                minus.set(r, c, minus.get(r, c) - h);
                let (lp, _) = softmax_xent(&plus, &labels).unwrap();
                let (lm, _) = softmax_xent(&minus, &labels).unwrap();
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grad.get(r, c);
                let rel = (analytic - numeric).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(rel <= 1e-6, "({r},{c}): analytic {analytic} numeric {numeric}");
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = RngStream::new(21, 0);
        let logits = Matrix::from_fn(6, 7, |_, _| rng.uniform_in(-30.0, 30.0));
        let probs = softmax_rows(&logits);
        for b in 0..6 {
            let s: f64 = probs.row(b).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        // Loss is non-negative for all finite inputs; zero only at certainty.
        #[test]
        fn loss_is_nonnegative(seed in 0u64..2000, b in 1usize..5, c in 2usize..6) {
            let mut rng = RngStream::new(seed, 5);
            let logits = Matrix::from_fn(b, c, |_, _| rng.uniform_in(-50.0, 50.0));
            let labels: Vec<usize> = (0..b).map(|_| rng.below(c)).collect();
            let (loss, grad) = softmax_xent(&logits, &labels).unwrap();
            prop_assert!(loss >= 0.0);
            prop_assert!(grad.all_finite());
        }
    }
}

//! Softmax cross-entropy over class logits.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits: `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (n, classes) = (logits.rows(), logits.cols());
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} labels for a batch of {n}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }

    let mut loss = 0.0;
    let mut grad = Matrix::zeros(n, classes);
    for r in 0..n {
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let log_sum = sum.ln() + max;
        loss += log_sum - row[labels[r]];
        for c in 0..classes {
            let softmax = exps[c] / sum;
            let onehot = if c == labels[r] { 1.0 } else { 0.0 };
            grad.set(r, c, (softmax - onehot) / n as f64);
        }
    }
    Ok((loss / n as f64, grad))
}

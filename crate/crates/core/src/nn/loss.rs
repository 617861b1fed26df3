use super::Tensor4;
use crate::{Error, Result};

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax - onehot) / N` with respect to the logits.
///
/// Each sample of `logits` is one row of class scores.
pub fn softmax_cross_entropy(logits: &Tensor4, labels: &[u8]) -> Result<(f64, Tensor4)> {
    let shape = logits.shape();
    let classes = shape.sample();
    if labels.len() != shape.n {
        return Err(Error::invalid(format!(
            "{} labels for a batch of {}",
            labels.len(),
            shape.n
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::invalid(format!("label {bad} outside [0, {classes})")));
    }
    let inv_n = 1.0 / shape.n as f64;
    let mut grad = Vec::with_capacity(shape.len());
    let mut total = 0.0;
    for (n, &label) in labels.iter().enumerate() {
        let row = logits.sample(n);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[label as usize];
        for (k, z) in row.iter().enumerate() {
            let p = (z - log_z).exp();
            let target = if k == label as usize { 1.0 } else { 0.0 };
            grad.push((p - target) * inv_n);
        }
    }
    Ok((total * inv_n, Tensor4::from_parts(shape, grad)))
}

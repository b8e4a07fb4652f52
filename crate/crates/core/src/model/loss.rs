//! Class-weighted cross-entropy.

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const LOSS_EPSILON: f64 = 1e-7;

/// Mean over the batch of `w_y * -ln p_y`, with `w_1 = positive_weight` and
/// `w_0 = 1`. `probs[i]` is `(p_non_suggestive, p_suggestive)`.
pub fn weighted_loss(probs: &[[f64; 2]], labels: &[Label], positive_weight: f64) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            let w = if y.is_positive() { positive_weight } else { 1.0 };
            -w * p[y.index()].max(LOSS_EPSILON).ln()
        })
        .sum();
    Ok(total / probs.len() as f64)
}

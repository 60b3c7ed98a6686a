//! Scalar and vector math shared across the network components: sigmoid,
//! tanh, stable softmax, cross-entropy with its gradient, cosine similarity
//! with its gradient, and the pairwise margin ranking loss.

use crate::neuralcore::tensor::dot;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn tanh_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.tanh()).collect()
}

/// Numerically stable softmax; outputs sum to 1.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Negative log-probability of `target` under softmax(logits), with the
/// gradient d loss / d logits = softmax − onehot. Always ≥ 0.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::Shape(format!(
            "cross-entropy target {target} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[target];
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Cosine similarity of two equal-length vectors. Zero vectors are
/// rejected: the value would be undefined.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "cosine: lengths differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na < 1e-30 || nb < 1e-30 {
        return Err(Error::NonFinite("cosine of a zero vector".into()));
    }
    Ok(dot(a, b) / (na * nb))
}

/// Gradients of cosine similarity with respect to both inputs, scaled by
/// the incoming gradient `dcos`.
pub fn cosine_backward(a: &[f64], b: &[f64], dcos: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na < 1e-30 || nb < 1e-30 {
        return Err(Error::NonFinite("cosine of a zero vector".into()));
    }
    let ab = dot(a, b);
    let da: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| dcos * (bi / (na * nb) - ab * ai / (na * na * na * nb)))
        .collect();
    let db: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| dcos * (ai / (na * nb) - ab * bi / (na * nb * nb * nb)))
        .collect();
    Ok((da, db))
}

/// Pairwise margin ranking loss max(0, m − f_pos + f_neg).
pub fn margin_rank_loss(f_pos: f64, f_neg: f64, margin: f64) -> f64 {
    (margin - f_pos + f_neg).max(0.0)
}

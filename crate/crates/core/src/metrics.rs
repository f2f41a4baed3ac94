//! Calibration and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// Default probability floor applied before taking logarithms.
pub const DEFAULT_CLIP_EPSILON: f64 = 1e-6;

/// Metrics for one set of predictions on a test fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub logloss: f64,
    pub mse: f64,
    pub classification_rate: f64,
    pub mse_vs_truth: Option<f64>,
    pub threshold: f64,
    pub clip_epsilon: f64,
}

impl MetricReport {
    /// Scores `probs` against `labels` with a threshold chosen beforehand.
    pub fn evaluate(
        probs: &[f64],
        labels: &[u8],
        threshold: f64,
        clip_epsilon: f64,
        true_probs: Option<&[f64]>,
    ) -> Result<Self> {
        Ok(MetricReport {
            logloss: logloss(probs, labels, clip_epsilon)?,
            mse: mse(probs, labels)?,
            classification_rate: classification_rate(probs, labels, threshold)?,
            mse_vs_truth: true_probs.map(|t| mse_vs_truth(probs, t)).transpose()?,
            threshold,
            clip_epsilon,
        })
    }
}

fn check_inputs(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.is_empty() {
        return Err(CalibError::InvalidArgument("no predictions".into()));
    }
    if probs.len() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: probs.len(),
            got: labels.len(),
        });
    }
    check_probs(probs)?;
    if let Some(&y) = labels.iter().find(|&&y| y > 1) {
        return Err(CalibError::InvalidArgument(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

fn check_probs(probs: &[f64]) -> Result<()> {
    match probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(CalibError::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        ))),
        None => Ok(()),
    }
}

/// Mean negative log-likelihood with probabilities clipped to `[ε, 1 − ε]`.
///
/// The clip is applied to the likelihood of the observed label rather than
/// to `p`, since `1 − (1 − ε)` is inexact for tiny ε and would let a term
/// exceed −ln ε.
pub fn logloss(probs: &[f64], labels: &[u8], clip_epsilon: f64) -> Result<f64> {
    if !(clip_epsilon > 0.0 && clip_epsilon < 0.5) {
        return Err(CalibError::InvalidArgument(format!(
            "clip epsilon {clip_epsilon} must lie in (0, 0.5)"
        )));
    }
    check_inputs(probs, labels)?;
    let bound = -clip_epsilon.ln();
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let likelihood = if y == 1 { p } else { 1.0 - p };
            -likelihood.max(clip_epsilon).ln()
        })
        .sum();
    // Averaging equal terms can round one ulp above the bound.
    Ok((total / probs.len() as f64).min(bound))
}

/// Mean squared difference between probability and 0/1 label.
pub fn mse(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(probs, labels)?;
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (f64::from(y) - p).powi(2))
        .sum();
    Ok(total / probs.len() as f64)
}

/// Mean squared difference between predicted and true posteriors.
pub fn mse_vs_truth(probs: &[f64], true_probs: &[f64]) -> Result<f64> {
    if probs.len() != true_probs.len() {
        return Err(CalibError::DimensionMismatch {
            expected: probs.len(),
            got: true_probs.len(),
        });
    }
    if probs.is_empty() {
        return Err(CalibError::InvalidArgument("no predictions".into()));
    }
    check_probs(probs)?;
    check_probs(true_probs)?;
    let total: f64 = probs
        .iter()
        .zip(true_probs)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    Ok(total / probs.len() as f64)
}

/// Fraction of samples where `p ≥ threshold` agrees with the label.
pub fn classification_rate(probs: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    check_inputs(probs, labels)?;
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= threshold) == (y == 1))
        .count();
    Ok(correct as f64 / probs.len() as f64)
}

/// Threshold maximizing the classification rate.
///
/// Candidates are 0, 1 and the midpoints between adjacent distinct
/// probabilities. Ties go to the smallest candidate.
pub fn select_threshold(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(probs, labels)?;
    let mut order: Vec<(f64, u8)> = probs.iter().copied().zip(labels.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Distinct values with cumulative (negatives, positives) at or below each.
    let mut distinct: Vec<f64> = Vec::new();
    let mut cum: Vec<(usize, usize)> = Vec::new();
    let (mut neg, mut pos) = (0usize, 0usize);
    for &(p, y) in &order {
        if y == 1 {
            pos += 1;
        } else {
            neg += 1;
        }
        if distinct.last() == Some(&p) {
            *cum.last_mut().unwrap() = (neg, pos);
        } else {
            distinct.push(p);
            cum.push((neg, pos));
        }
    }
    let total_pos = pos;
    // Correct decisions when everything strictly below `t` is called negative.
    let correct_at = |t: f64| {
        let k = distinct.partition_point(|&d| d < t);
        let (n, p) = if k == 0 { (0, 0) } else { cum[k - 1] };
        n + (total_pos - p)
    };

    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    candidates.push(0.0);
    candidates.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(1.0);

    let mut best = (correct_at(0.0), 0.0);
    for &t in &candidates[1..] {
        let c = correct_at(t);
        if c > best.0 {
            best = (c, t);
        }
    }
    Ok(best.1)
}

use serde::{Deserialize, Serialize};

use super::{merge_ties, require_points, step_index, CalibrationPoint};
use crate::error::Result;

/// Non-decreasing step function over scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicModel {
    /// Score thresholds between blocks; a score at a threshold belongs to
    /// the upper block.
    pub boundaries: Vec<f64>,
    /// Fitted value of each block, strictly increasing.
    pub values: Vec<f64>,
}

impl IsotonicModel {
    pub fn predict(&self, score: f64) -> f64 {
        self.values[step_index(&self.boundaries, score)]
    }
}

/// Weighted least-squares projection of `values` onto non-decreasing
/// sequences (pool adjacent violators). Adjacent blocks with equal values
/// are pooled too, so block values in the result are strictly increasing.
pub fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let (blocks, _) = pava_blocks(values, weights);
    let mut out = Vec::with_capacity(values.len());
    for (value, len) in blocks {
        out.extend(std::iter::repeat_n(value, len));
    }
    out
}

/// Blocks as (value, length) plus their total weights.
fn pava_blocks(values: &[f64], weights: &[f64]) -> (Vec<(f64, usize)>, Vec<f64>) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    let mut block_w: Vec<f64> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let (mut value, mut len, mut weight) = (v, 1usize, w);
        while let (Some(&(pv, pl)), Some(&pw)) = (blocks.last(), block_w.last()) {
            if pv < value {
                break;
            }
            let total = pw + weight;
            value = (pv * pw + value * weight) / total;
            len += pl;
            weight = total;
            blocks.pop();
            block_w.pop();
        }
        blocks.push((value, len));
        block_w.push(weight);
    }
    (blocks, block_w)
}

pub fn pava_fit(points: &[CalibrationPoint]) -> Result<IsotonicModel> {
    require_points(points, 2)?;
    let merged = merge_ties(points)?;
    let targets: Vec<f64> = merged.iter().map(|p| p.target).collect();
    let weights: Vec<f64> = merged.iter().map(|p| p.weight).collect();
    let (blocks, _) = pava_blocks(&targets, &weights);
    let mut boundaries = Vec::with_capacity(blocks.len().saturating_sub(1));
    let mut end = 0;
    for &(_, len) in &blocks[..blocks.len() - 1] {
        end += len;
        boundaries.push(0.5 * (merged[end - 1].score + merged[end].score));
    }
    Ok(IsotonicModel {
        boundaries,
        values: blocks.iter().map(|&(v, _)| v.clamp(0.0, 1.0)).collect(),
    })
}

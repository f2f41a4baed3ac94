use serde::{Deserialize, Serialize};

use super::{merge_ties, require_points, step_index, CalibrationPoint};
use crate::error::{CalibError, Result};

/// Equal-frequency histogram binning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningModel {
    /// Interior bin edges; the outer bins extend to ±infinity.
    pub edges: Vec<f64>,
    /// Weighted mean target per bin.
    pub values: Vec<f64>,
    /// Number of (tie-merged) points per bin.
    pub sizes: Vec<usize>,
}

impl BinningModel {
    pub fn predict(&self, score: f64) -> f64 {
        self.values[step_index(&self.edges, score)]
    }
}

/// Bin sizes for `n` points in `n_bins` bins; the remainder adds one point
/// to each of the lowest bins.
fn bin_sizes(n: usize, n_bins: usize) -> Vec<usize> {
    let (base, rem) = (n / n_bins, n % n_bins);
    (0..n_bins).map(|k| base + usize::from(k < rem)).collect()
}

pub fn binning_fit(points: &[CalibrationPoint], n_bins: usize) -> Result<BinningModel> {
    if n_bins == 0 {
        return Err(CalibError::InvalidArgument("n_bins must be at least 1".into()));
    }
    let merged = merge_ties(points)?;
    require_points(&merged, n_bins)?;
    let sizes = bin_sizes(merged.len(), n_bins);
    let mut edges = Vec::with_capacity(n_bins - 1);
    let mut values = Vec::with_capacity(n_bins);
    let mut start = 0;
    for &size in &sizes {
        let bin = &merged[start..start + size];
        let w: f64 = bin.iter().map(|p| p.weight).sum();
        values.push((bin.iter().map(|p| p.weight * p.target).sum::<f64>() / w).clamp(0.0, 1.0));
        start += size;
        if start < merged.len() {
            edges.push(0.5 * (merged[start - 1].score + merged[start].score));
        }
    }
    Ok(BinningModel {
        edges,
        values,
        sizes,
    })
}

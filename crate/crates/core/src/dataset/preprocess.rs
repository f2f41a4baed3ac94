use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};

/// Columns whose training variance falls below this are dropped.
pub const NZV_THRESHOLD: f64 = 1e-8;

/// Per-column centering and scaling learned from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    /// Original column indices that survived the near-zero-variance filter.
    pub kept_columns: Vec<usize>,
    /// Training means of the kept columns.
    pub means: Vec<f64>,
    /// Training standard deviations (n - 1 denominator) of the kept columns.
    pub std_devs: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let n = train.n_samples();
        if n == 0 {
            return Err(CalibError::InvalidArgument("empty training set".into()));
        }
        let mut kept_columns = Vec::new();
        let mut means = Vec::new();
        let mut std_devs = Vec::new();
        for j in 0..train.n_features() {
            let mean = (0..n).map(|i| train.value(i, j)).sum::<f64>() / n as f64;
            let var = if n > 1 {
                (0..n).map(|i| (train.value(i, j) - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            if var >= NZV_THRESHOLD {
                kept_columns.push(j);
                means.push(mean);
                std_devs.push(var.sqrt());
            }
        }
        if kept_columns.is_empty() {
            return Err(CalibError::NoFeaturesRemain);
        }
        Ok(StandardizationParams {
            kept_columns,
            means,
            std_devs,
        })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let max_col = *self.kept_columns.last().expect("non-empty by construction");
        if ds.n_features() <= max_col {
            return Err(CalibError::DimensionMismatch {
                expected: max_col + 1,
                got: ds.n_features(),
            });
        }
        let selected = ds.select_columns(&self.kept_columns);
        Ok(selected.map_features(|j, v| (v - self.means[j]) / self.std_devs[j]))
    }
}

/// Fit standardization on `train` only and apply it to `train` and every
/// dataset in `apply_to`.
pub fn standardize(
    train: &Dataset,
    apply_to: &[&Dataset],
) -> Result<(Dataset, Vec<Dataset>, StandardizationParams)> {
    for other in apply_to {
        if other.n_features() != train.n_features() {
            return Err(CalibError::DimensionMismatch {
                expected: train.n_features(),
                got: other.n_features(),
            });
        }
    }
    let params = StandardizationParams::fit(train)?;
    let train_out = params.apply(train)?;
    let others = apply_to
        .iter()
        .map(|d| params.apply(d))
        .collect::<Result<Vec<_>>>()?;
    Ok((train_out, others, params))
}

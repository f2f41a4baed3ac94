use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};
use crate::rng;

/// Mean of the positive-class Gaussian; both classes have identity covariance.
pub const POSITIVE_MEAN: [f64; 2] = [0.0, 0.0];
pub const NEGATIVE_MEAN: [f64; 2] = [1.5, 1.5];

/// Generating parameters and exact posteriors of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub positive_mean: [f64; 2],
    pub negative_mean: [f64; 2],
    /// Shared covariance of both classes.
    pub covariance: [[f64; 2]; 2],
    /// Original 2-D points, one per dataset row. Not given to classifiers.
    pub raw_points: Vec<[f64; 2]>,
    pub true_probs: Vec<f64>,
}

impl SyntheticTruth {
    /// P(y = 1 | x) for equal priors and identity covariance.
    pub fn posterior(&self, x: [f64; 2]) -> f64 {
        posterior(x, self.positive_mean, self.negative_mean)
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn posterior(x: [f64; 2], pos_mean: [f64; 2], neg_mean: [f64; 2]) -> f64 {
    // f-(x) / f+(x) = exp(log_ratio); the normalizing constants cancel.
    let log_ratio = 0.5 * (sq_dist(x, pos_mean) - sq_dist(x, neg_mean));
    1.0 / (1.0 + log_ratio.exp())
}

/// The engineered features handed to classifiers in place of (x1, x2).
pub fn derivative_features(x: [f64; 2]) -> [f64; 5] {
    let [a, b] = x;
    [a + b, a - b, a * b, a * a, b * b]
}

/// Two-Gaussian ground-truth problem with `n_per_class` samples per class.
/// Positive rows come first. Only derivative features are exposed.
pub fn make_synthetic(n_per_class: usize, seed: u64) -> Result<(Dataset, SyntheticTruth)> {
    if n_per_class < 2 {
        return Err(CalibError::InvalidArgument(format!(
            "n_per_class = {n_per_class}, need at least 2"
        )));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut raw_points = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, mean) in [(1u8, POSITIVE_MEAN), (0u8, NEGATIVE_MEAN)] {
        for _ in 0..n_per_class {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            raw_points.push([mean[0] + z0, mean[1] + z1]);
            labels.push(label);
        }
    }
    let true_probs: Vec<f64> = raw_points
        .iter()
        .map(|&x| posterior(x, POSITIVE_MEAN, NEGATIVE_MEAN))
        .collect();
    let features = raw_points
        .iter()
        .flat_map(|&x| derivative_features(x))
        .collect();
    let names = ["x1_plus_x2", "x1_minus_x2", "x1_times_x2", "x1_squared", "x2_squared"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let ds = Dataset::new(format!("synthetic{n_per_class}"), features, labels, names)?
        .with_true_probs(true_probs.clone())?;
    let truth = SyntheticTruth {
        positive_mean: POSITIVE_MEAN,
        negative_mean: NEGATIVE_MEAN,
        covariance: [[1.0, 0.0], [0.0, 1.0]],
        raw_points,
        true_probs,
    };
    Ok((ds, truth))
}

/// Write `row_id,true_prob` for audit.
pub fn write_truth_csv(path: impl AsRef<Path>, true_probs: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row_id", "true_prob"])?;
    for (i, p) in true_probs.iter().enumerate() {
        w.write_record([i.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

/// Keep exactly `n_keep` uniformly chosen members of `target_class` and all
/// of the other class, then shuffle the row order.
pub fn subsample_class(ds: &Dataset, target_class: u8, n_keep: usize, seed: u64) -> Result<Dataset> {
    if target_class > 1 {
        return Err(CalibError::InvalidArgument(format!("class {target_class} is not 0 or 1")));
    }
    let members = ds.class_indices(target_class);
    if n_keep > members.len() {
        return Err(CalibError::InvalidArgument(format!(
            "cannot keep {n_keep} of {} members of class {target_class}",
            members.len()
        )));
    }
    let mut rng = rng::stream(seed, &[]);
    let chosen = index::sample(&mut rng, members.len(), n_keep);
    let mut keep: Vec<usize> = chosen.iter().map(|k| members[k]).collect();
    keep.extend(ds.class_indices(1 - target_class));
    keep.sort_unstable();
    keep.shuffle(&mut rng);
    Ok(ds.subset(&keep))
}

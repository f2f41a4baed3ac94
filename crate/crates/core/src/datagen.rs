//! Calibration-data generation by Monte Carlo cross validation (DG) and
//! grouping of the generated pairs (DGG).
//!
//! DG repeatedly splits the training set, fits the base classifier on the
//! larger part and scores the held-out part, yielding as many
//! (score, label) pairs as requested. DGG sorts those pairs by score and
//! replaces each run of `group_size` with its mean score and positive
//! fraction, which smooths the targets away from exact 0 and 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrators::CalibrationPoint;
use crate::classifiers::{fit_classifier, ClassifierSpec};
use crate::dataset::{split_calibration_indices, Dataset};
use crate::error::{CalibError, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgConfig {
    pub n_points: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    /// Refit inside every iteration. Give forests a fixed mtry here so
    /// iterations do not re-tune.
    pub classifier: ClassifierSpec,
}

impl DgConfig {
    pub fn new(classifier: ClassifierSpec) -> Self {
        DgConfig {
            n_points: 2000,
            holdout_fraction: 0.1,
            seed: 0,
            classifier,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(CalibError::InvalidArgument("n_points must be at least 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(CalibError::InvalidArgument(format!(
                "holdout fraction {} outside (0, 1)",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DggConfig {
    pub group_size: usize,
}

impl Default for DggConfig {
    fn default() -> Self {
        DggConfig { group_size: 20 }
    }
}

fn dg_iteration(train: &Dataset, cfg: &DgConfig, iteration: usize) -> Result<Vec<CalibrationPoint>> {
    let seed = rng::derive_seed(cfg.seed, &[rng::PURPOSE_SPLIT, iteration as u64]);
    let (fit_idx, hold_idx) = split_calibration_indices(train, cfg.holdout_fraction, seed)?;
    let spec = cfg.classifier.with_seed(rng::derive_seed(seed, &[rng::PURPOSE_MODEL]));
    let (model, _) = fit_classifier(&train.subset(&fit_idx), &spec)?;
    hold_idx
        .iter()
        .map(|&i| {
            let score = model.predict_score(train.row(i))?;
            Ok(CalibrationPoint::new(score, f64::from(train.label(i))))
        })
        .collect()
}

/// Generate exactly `cfg.n_points` held-out (score, label) pairs.
///
/// Iterations run in parallel; the output is ordered by iteration, then by
/// row index within each holdout, so it depends only on `cfg.seed`.
pub fn dg_generate(train: &Dataset, cfg: &DgConfig) -> Result<Vec<CalibrationPoint>> {
    cfg.validate()?;
    // Every iteration holds out the same number of rows.
    let per_iteration = split_calibration_indices(train, cfg.holdout_fraction, cfg.seed)?
        .1
        .len();
    let iterations = cfg.n_points.div_ceil(per_iteration);
    let batches: Vec<Vec<CalibrationPoint>> = (0..iterations)
        .into_par_iter()
        .map(|i| {
            dg_iteration(train, cfg, i).map_err(|e| CalibError::DataGeneration {
                iteration: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut points: Vec<CalibrationPoint> = batches.into_iter().flatten().collect();
    points.truncate(cfg.n_points);
    Ok(points)
}

/// Group score-sorted points into runs of `group_size`.
///
/// A trailing remainder of at least half a group forms its own group;
/// a smaller one joins the previous group. Each output point carries the
/// weighted mean score and target of its group and the group's total weight.
pub fn dgg_group(points: &[CalibrationPoint], cfg: &DggConfig) -> Result<Vec<CalibrationPoint>> {
    let g = cfg.group_size;
    if g == 0 {
        return Err(CalibError::InvalidArgument("group_size must be at least 1".into()));
    }
    if points.len() < g {
        return Err(CalibError::TooFewPoints {
            needed: g,
            got: points.len(),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    let n = sorted.len();
    let mut bounds: Vec<usize> = (0..n / g).map(|k| k * g).collect();
    let rem = n % g;
    if rem > 0 && 2 * rem >= g {
        bounds.push(n - rem);
    }
    bounds.push(n);

    Ok(bounds
        .windows(2)
        .map(|w| {
            let group = &sorted[w[0]..w[1]];
            let weight: f64 = group.iter().map(|p| p.weight).sum();
            let score = group.iter().map(|p| p.weight * p.score).sum::<f64>() / weight;
            let target = group.iter().map(|p| p.weight * p.target).sum::<f64>() / weight;
            CalibrationPoint::weighted(score, target.clamp(0.0, 1.0), weight)
        })
        .collect())
}

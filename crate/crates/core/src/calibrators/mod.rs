//! Score-to-probability maps.
//!
//! Every calibrator consumes [`CalibrationPoint`]s. Points sharing a score
//! are merged (weighted mean target, summed weight) before fitting, so the
//! piecewise-constant maps have a well-defined block per distinct score.

mod binning;
mod enir;
mod isotonic;
mod nir;
mod platt;

pub use binning::{binning_fit, BinningModel};
pub use enir::{enir_fit, EnirMember, EnirModel, RSS_FLOOR};
pub use isotonic::{pava, pava_fit, IsotonicModel};
pub use nir::{nir_path, NirKnot, NirPath};
pub use platt::{platt_fit, PlattModel, PLATT_GRAD_TOL, PLATT_MAX_ITER};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// A (score, target, weight) triple. Targets are 0/1 labels or, for grouped
/// data, positive fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub score: f64,
    pub target: f64,
    pub weight: f64,
}

impl CalibrationPoint {
    pub fn new(score: f64, target: f64) -> Self {
        CalibrationPoint {
            score,
            target,
            weight: 1.0,
        }
    }

    pub fn weighted(score: f64, target: f64, weight: f64) -> Self {
        CalibrationPoint {
            score,
            target,
            weight,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.score.is_finite() {
            return Err(CalibError::NonFiniteScore(self.score));
        }
        if !(0.0..=1.0).contains(&self.target) {
            return Err(CalibError::InvalidArgument(format!(
                "target {} outside [0, 1]",
                self.target
            )));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(CalibError::InvalidArgument(format!(
                "weight {} is not positive",
                self.weight
            )));
        }
        Ok(())
    }
}

/// Build unit-weight points from paired scores and 0/1 labels.
pub fn points_from_labels(scores: &[f64], labels: &[u8]) -> Vec<CalibrationPoint> {
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| CalibrationPoint::new(s, f64::from(y)))
        .collect()
}

/// Validate, sort by score, and merge points with equal scores.
pub fn merge_ties(points: &[CalibrationPoint]) -> Result<Vec<CalibrationPoint>> {
    for p in points {
        p.validate()?;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut merged: Vec<CalibrationPoint> = Vec::with_capacity(sorted.len());
    let mut wt_sum = 0.0;
    for p in sorted {
        match merged.last_mut() {
            Some(last) if last.score == p.score => {
                last.weight += p.weight;
                wt_sum += p.weight * p.target;
                last.target = (wt_sum / last.weight).clamp(0.0, 1.0);
            }
            _ => {
                wt_sum = p.weight * p.target;
                merged.push(p);
            }
        }
    }
    Ok(merged)
}

fn require_points(points: &[CalibrationPoint], needed: usize) -> Result<()> {
    if points.len() < needed {
        return Err(CalibError::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    Ok(())
}

/// Midpoints between adjacent distinct sorted scores.
pub(crate) fn midpoints(sorted_scores: &[f64]) -> Vec<f64> {
    sorted_scores
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect()
}

/// Index of the step containing `score`: the number of boundaries at or
/// below it. Scores outside the training range clamp to the end steps.
#[inline]
pub(crate) fn step_index(boundaries: &[f64], score: f64) -> usize {
    boundaries.partition_point(|&b| b <= score)
}

fn check_score(score: f64) -> Result<()> {
    if score.is_finite() {
        Ok(())
    } else {
        Err(CalibError::NonFiniteScore(score))
    }
}

/// Any fitted calibrator. Serializes as JSON tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator {
    Identity,
    Isotonic(IsotonicModel),
    Enir(EnirModel),
    Platt(PlattModel),
    Binning(BinningModel),
}

impl Calibrator {
    pub fn calibrate(&self, score: f64) -> Result<f64> {
        check_score(score)?;
        Ok(match self {
            Calibrator::Identity => score,
            Calibrator::Isotonic(m) => m.predict(score),
            Calibrator::Enir(m) => m.predict(score),
            Calibrator::Platt(m) => m.predict(score),
            Calibrator::Binning(m) => m.predict(score),
        })
    }

    pub fn calibrate_all(&self, scores: &[f64]) -> Result<Vec<f64>> {
        scores.iter().map(|&s| self.calibrate(s)).collect()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Calibrator::Identity => "identity",
            Calibrator::Isotonic(_) => "isotonic",
            Calibrator::Enir(_) => "enir",
            Calibrator::Platt(_) => "platt",
            Calibrator::Binning(_) => "binning",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| CalibError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| CalibError::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Write points as `score,target,weight` CSV.
pub fn write_points_csv(path: impl AsRef<Path>, points: &[CalibrationPoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["score", "target", "weight"])?;
    for p in points {
        w.write_record([p.score.to_string(), p.target.to_string(), p.weight.to_string()])?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

/// Read `score,target[,weight]` CSV.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<CalibrationPoint>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(CalibError::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize, name: &str| -> Result<f64> {
            let cell = rec.get(j).unwrap_or("");
            cell.trim().parse().map_err(|_| CalibError::NonNumeric {
                row: row + 1,
                column: name.to_owned(),
                value: cell.to_owned(),
            })
        };
        let weight = if rec.len() > 2 { parse(2, "weight")? } else { 1.0 };
        out.push(CalibrationPoint::weighted(parse(0, "score")?, parse(1, "target")?, weight));
    }
    Ok(out)
}

//! Ensemble of near-isotonic fits taken along the λ path, weighted by BIC.

use serde::{Deserialize, Serialize};

use super::isotonic::pava;
use super::nir::{expand, walk_path};
use super::{merge_ties, midpoints, require_points, step_index, CalibrationPoint};
use crate::error::Result;

/// RSS floor applied before taking the logarithm in the BIC.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnirMember {
    pub lambda: f64,
    pub n_groups: usize,
    pub rss: f64,
    pub bic: f64,
    pub weight: f64,
    /// Fitted value per distinct training score.
    pub values: Vec<f64>,
}

impl EnirMember {
    pub fn predict(&self, boundaries: &[f64], score: f64) -> f64 {
        self.values[step_index(boundaries, score)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnirModel {
    /// Midpoints between adjacent distinct training scores.
    pub boundaries: Vec<f64>,
    pub members: Vec<EnirMember>,
    /// Weight-blended member values per step.
    pub blended: Vec<f64>,
}

impl EnirModel {
    pub fn predict(&self, score: f64) -> f64 {
        self.blended[step_index(&self.boundaries, score)]
    }

    pub fn member_predictions(&self, score: f64) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.predict(&self.boundaries, score))
            .collect()
    }
}

fn weighted_rss(points: &[CalibrationPoint], fit: &[f64]) -> f64 {
    points
        .iter()
        .zip(fit)
        .map(|(p, b)| p.weight * (p.target - b).powi(2))
        .sum()
}

/// Residual sum of squares that tie merging hides: the spread of the
/// original targets around their merged mean. Fits are constant within a
/// tie, so this term is the same for every member but belongs in the RSS.
fn within_tie_ss(points: &[CalibrationPoint], merged: &[CalibrationPoint]) -> f64 {
    points
        .iter()
        .map(|p| {
            let k = merged.partition_point(|m| m.score < p.score);
            p.weight * (p.target - merged[k].target).powi(2)
        })
        .sum()
}

/// BIC = n ln(RSS / n) + df ln n with n the total point weight.
fn bic(rss: f64, df: usize, n: f64) -> f64 {
    n * (rss.max(RSS_FLOOR) / n).ln() + df as f64 * n.ln()
}

/// Fit the ensemble. RSS is measured against the original points, ties
/// included. The saturated λ = 0 member is dropped when it
/// interpolates the targets (RSS below the floor); if nothing remains, the
/// isotonic fit becomes the only member.
pub fn enir_fit(points: &[CalibrationPoint]) -> Result<EnirModel> {
    require_points(points, 2)?;
    let merged = merge_ties(points)?;
    let n_eff: f64 = merged.iter().map(|p| p.weight).sum();
    let targets: Vec<f64> = merged.iter().map(|p| p.target).collect();
    let weights: Vec<f64> = merged.iter().map(|p| p.weight).collect();
    let len = merged.len();
    let rss_ties = within_tie_ss(points, &merged);

    // First pass: BIC of every knot, without keeping fits.
    let mut summaries: Vec<(f64, usize, f64, f64)> = Vec::new();
    let mut last_lambda = 0.0;
    walk_path(&targets, &weights, |lambda, groups| {
        last_lambda = lambda;
        let fit = expand(groups, lambda, len);
        let rss = weighted_rss(&merged, &fit) + rss_ties;
        if lambda == 0.0 && rss < RSS_FLOOR {
            return;
        }
        summaries.push((lambda, groups.len(), rss, bic(rss, groups.len(), n_eff)));
    });

    let mut members = if summaries.is_empty() {
        let values = pava(&targets, &weights);
        let rss = weighted_rss(&merged, &values) + rss_ties;
        let df = count_runs(&values);
        vec![EnirMember {
            lambda: last_lambda,
            n_groups: df,
            rss,
            bic: bic(rss, df, n_eff),
            weight: 1.0,
            values,
        }]
    } else {
        let best = summaries.iter().map(|s| s.3).fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = summaries.iter().map(|s| (-(s.3 - best) / 2.0).exp()).collect();
        let total: f64 = raw.iter().sum();
        let mut keep: Vec<EnirMember> = summaries
            .iter()
            .zip(&raw)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&(lambda, n_groups, rss, bic), &w)| EnirMember {
                lambda,
                n_groups,
                rss,
                bic,
                weight: w / total,
                values: Vec::new(),
            })
            .collect();
        // Second pass: collect fits of members that carry weight.
        let mut next = 0;
        walk_path(&targets, &weights, |lambda, groups| {
            if next < keep.len() && keep[next].lambda == lambda {
                keep[next].values = expand(groups, lambda, len);
                next += 1;
            }
        });
        keep
    };
    for m in &mut members {
        for v in &mut m.values {
            *v = v.clamp(0.0, 1.0);
        }
    }
    // Renormalize so the weights sum to one to rounding.
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }
    let mut blended = vec![0.0; len];
    for m in &members {
        for (b, v) in blended.iter_mut().zip(&m.values) {
            *b += m.weight * v;
        }
    }
    for b in &mut blended {
        *b = b.clamp(0.0, 1.0);
    }
    let scores: Vec<f64> = merged.iter().map(|p| p.score).collect();
    Ok(EnirModel {
        boundaries: midpoints(&scores),
        members,
        blended,
    })
}

fn count_runs(values: &[f64]) -> usize {
    1 + values.windows(2).filter(|w| w[0] != w[1]).count()
}

use serde::{Deserialize, Serialize};

use super::{require_points, CalibrationPoint};
use crate::error::{CalibError, Result};

pub const PLATT_GRAD_TOL: f64 = 1e-10;
pub const PLATT_MAX_ITER: usize = 200;

/// Sigmoid map p(s) = 1 / (1 + exp(A s + B)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattModel {
    pub a: f64,
    pub b: f64,
}

impl PlattModel {
    pub fn predict(&self, score: f64) -> f64 {
        let f = self.a * score + self.b;
        if f >= 0.0 {
            let e = (-f).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + f.exp())
        }
    }
}

/// ln(1 + e^f) without overflow.
fn softplus(f: f64) -> f64 {
    if f > 0.0 {
        f + (-f).exp().ln_1p()
    } else {
        f.exp().ln_1p()
    }
}

/// Weighted cross-entropy of the sigmoid against `targets`.
fn nll(a: f64, b: f64, scores: &[f64], targets: &[f64], weights: &[f64]) -> f64 {
    scores
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((&s, &t), &w)| {
            let f = a * s + b;
            w * (softplus(f) - (1.0 - t) * f)
        })
        .sum()
}

/// Targets used by the optimizer: 0/1 labels become (N+ + 1)/(N+ + 2) and
/// 1/(N- + 2); fractional targets pass through.
fn smoothed_targets(points: &[CalibrationPoint]) -> (Vec<f64>, f64) {
    let binary = points.iter().all(|p| p.target == 0.0 || p.target == 1.0);
    let total: f64 = points.iter().map(|p| p.weight).sum();
    if binary {
        let n_pos: f64 = points.iter().filter(|p| p.target == 1.0).map(|p| p.weight).sum();
        let n_neg = total - n_pos;
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let targets = points
            .iter()
            .map(|p| if p.target == 1.0 { hi } else { lo })
            .collect();
        (targets, ((n_neg + 1.0) / (n_pos + 1.0)).ln())
    } else {
        let base = (points.iter().map(|p| p.weight * p.target).sum::<f64>() / total)
            .clamp(1e-6, 1.0 - 1e-6);
        let targets = points.iter().map(|p| p.target).collect();
        (targets, ((1.0 - base) / base).ln())
    }
}

/// Fit (A, B) by damped Newton iterations with step halving, starting from
/// A = 0 and B at the log-odds of the smoothed base rate.
pub fn platt_fit(points: &[CalibrationPoint]) -> Result<PlattModel> {
    require_points(points, 2)?;
    for p in points {
        p.validate()?;
    }
    let t_min = points.iter().map(|p| p.target).fold(f64::INFINITY, f64::min);
    let t_max = points.iter().map(|p| p.target).fold(f64::NEG_INFINITY, f64::max);
    if t_max <= t_min {
        return Err(CalibError::InvalidArgument(
            "Platt scaling needs targets of both orientations".into(),
        ));
    }
    let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
    let weights: Vec<f64> = points.iter().map(|p| p.weight).collect();
    let total: f64 = weights.iter().sum();
    let (targets, b0) = smoothed_targets(points);

    let (mut a, mut b) = (0.0, b0);
    let mut loss = nll(a, b, &scores, &targets, &weights);
    let mut grad_norm = f64::INFINITY;
    for _ in 0..PLATT_MAX_ITER {
        // Gradient and Hessian of the loss in (A, B).
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&s, &t), &w) in scores.iter().zip(&targets).zip(&weights) {
            let p = PlattModel { a, b }.predict(s);
            let d = w * (t - p);
            let h = w * p * (1.0 - p);
            ga += d * s;
            gb += d;
            haa += h * s * s;
            hab += h * s;
            hbb += h;
        }
        grad_norm = (ga * ga + gb * gb).sqrt() / total;
        if grad_norm < PLATT_GRAD_TOL {
            return Ok(PlattModel { a, b });
        }
        // Small ridge keeps the system solvable when scores are nearly constant.
        let ridge = 1e-12 * (haa + hbb).max(1e-300);
        let (haa, hbb) = (haa + ridge, hbb + ridge);
        let det = haa * hbb - hab * hab;
        let (da, db) = (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det);
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nl = nll(na, nb, &scores, &targets, &weights);
            if nl <= loss + 1e-12 * loss.abs() {
                a = na;
                b = nb;
                loss = nl;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Err(CalibError::PlattNonConvergence { a, b, grad_norm })
}

//! Solution path of near-isotonic regression,
//!
//! ```text
//! minimize  ½ Σ w_i (y_i − β_i)² + λ Σ (β_i − β_{i+1})_+
//! ```
//!
//! over λ ≥ 0. Between knots the solution is made of fused groups whose
//! values move linearly in λ: a group with weight W, weighted mean ȳ and
//! monotonicity violations on its left (s_l) and right (s_r) sits at
//! ȳ + λ (s_l − s_r) / W. Adjacent groups merge when their values meet and
//! stay merged, so the path is traced by repeatedly jumping to the next
//! collision until no violations remain, at which point the fit is the
//! isotonic solution.

use serde::{Deserialize, Serialize};

use super::{merge_ties, require_points, CalibrationPoint};
use crate::error::Result;

/// Relative tolerance for treating two collision values as simultaneous.
const LAMBDA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Group {
    pub start: usize,
    pub end: usize,
    pub weight: f64,
    /// Weighted mean target. Kept directly rather than as Σwy so that
    /// unmerged groups sit exactly on their targets.
    mean: f64,
    slope: f64,
}

impl Group {
    #[inline]
    pub fn value(&self, lambda: f64) -> f64 {
        self.mean + lambda * self.slope
    }
}

fn set_slopes(groups: &mut [Group], values: &[f64]) {
    let n = groups.len();
    for g in 0..n {
        let s_left = if g > 0 && values[g - 1] > values[g] { 1.0 } else { 0.0 };
        let s_right = if g + 1 < n && values[g] > values[g + 1] { 1.0 } else { 0.0 };
        groups[g].slope = (s_left - s_right) / groups[g].weight;
    }
}

/// Next collision at or after `lambda`, per adjacent pair.
fn collision(a: &Group, b: &Group, lambda: f64) -> Option<f64> {
    let gap = a.value(lambda) - b.value(lambda);
    let closing = a.slope - b.slope;
    // Approaching when the gap shrinks toward zero.
    if closing == 0.0 || gap * closing >= 0.0 && gap != 0.0 {
        return None;
    }
    let at = (b.mean - a.mean) / closing;
    Some(at.max(lambda))
}

/// Trace the path, calling `visit(lambda, groups)` at λ = 0 and after every
/// merge. Knot λ values passed to `visit` are strictly increasing.
pub(crate) fn walk_path(targets: &[f64], weights: &[f64], mut visit: impl FnMut(f64, &[Group])) {
    // Runs of equal targets are fused from the start.
    let mut groups: Vec<Group> = Vec::new();
    for (i, (&y, &w)) in targets.iter().zip(weights).enumerate() {
        match groups.last_mut() {
            Some(g) if targets[g.end - 1] == y => {
                g.end = i + 1;
                g.weight += w;
            }
            _ => groups.push(Group {
                start: i,
                end: i + 1,
                weight: w,
                mean: y,
                slope: 0.0,
            }),
        }
    }
    let values: Vec<f64> = groups.iter().map(|g| g.value(0.0)).collect();
    set_slopes(&mut groups, &values);
    visit(0.0, &groups);

    let mut lambda = 0.0;
    let mut pending = false;
    let mut hits: Vec<Option<f64>> = Vec::new();
    loop {
        hits.clear();
        hits.extend(groups.windows(2).map(|w| collision(&w[0], &w[1], lambda)));
        let next = hits.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let tol = LAMBDA_TOL * (1.0 + lambda.abs());
        if pending && (!next.is_finite() || next > lambda + tol) {
            visit(lambda, &groups);
        }
        if !next.is_finite() {
            break;
        }
        let at = next.max(lambda);
        let tol = LAMBDA_TOL * (1.0 + at.abs());

        // Values at the collision, before slopes change.
        let old_values: Vec<f64> = groups.iter().map(|g| g.value(at)).collect();
        let mut merged: Vec<Group> = Vec::with_capacity(groups.len());
        let mut values: Vec<f64> = Vec::with_capacity(groups.len());
        for (g, group) in groups.iter().enumerate() {
            let joins = g > 0 && hits[g - 1].is_some_and(|h| h <= at + tol);
            if joins {
                let last = merged.last_mut().expect("g > 0");
                let v = values.last_mut().expect("g > 0");
                *v = (*v * last.weight + old_values[g] * group.weight) / (last.weight + group.weight);
                let total = last.weight + group.weight;
                last.mean = (last.mean * last.weight + group.mean * group.weight) / total;
                last.end = group.end;
                last.weight = total;
            } else {
                merged.push(*group);
                values.push(old_values[g]);
            }
        }
        set_slopes(&mut merged, &values);
        groups = merged;
        lambda = at;
        pending = true;
    }
    debug_assert!(groups.windows(2).all(|w| w[0].value(lambda) <= w[1].value(lambda) + 1e-9));
}

pub(crate) fn expand(groups: &[Group], lambda: f64, n: usize) -> Vec<f64> {
    let mut fit = Vec::with_capacity(n);
    for g in groups {
        let v = g.value(lambda);
        fit.extend(std::iter::repeat_n(v, g.end - g.start));
    }
    fit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NirKnot {
    pub lambda: f64,
    /// Number of fused groups (degrees of freedom).
    pub n_groups: usize,
    /// Fitted value per merged calibration point.
    pub fit: Vec<f64>,
}

/// The full path over tie-merged, score-sorted points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NirPath {
    pub points: Vec<CalibrationPoint>,
    pub knots: Vec<NirKnot>,
}

impl NirPath {
    /// Penalized objective of `fit` at `lambda` against the merged points.
    pub fn objective(&self, fit: &[f64], lambda: f64) -> f64 {
        let loss: f64 = self
            .points
            .iter()
            .zip(fit)
            .map(|(p, b)| 0.5 * p.weight * (p.target - b).powi(2))
            .sum();
        let penalty: f64 = fit.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum();
        loss + lambda * penalty
    }

    /// Solution at an arbitrary λ, interpolating linearly between knots.
    pub fn fit_at(&self, lambda: f64) -> Vec<f64> {
        let k = self.knots.partition_point(|kn| kn.lambda <= lambda);
        if k == self.knots.len() {
            return self.knots[k - 1].fit.clone();
        }
        let (a, b) = (&self.knots[k - 1], &self.knots[k]);
        let t = (lambda - a.lambda) / (b.lambda - a.lambda);
        a.fit.iter().zip(&b.fit).map(|(x, y)| x + t * (y - x)).collect()
    }
}

pub fn nir_path(points: &[CalibrationPoint]) -> Result<NirPath> {
    require_points(points, 2)?;
    let merged = merge_ties(points)?;
    let targets: Vec<f64> = merged.iter().map(|p| p.target).collect();
    let weights: Vec<f64> = merged.iter().map(|p| p.weight).collect();
    let mut knots = Vec::new();
    walk_path(&targets, &weights, |lambda, groups| {
        knots.push(NirKnot {
            lambda,
            n_groups: groups.len(),
            fit: expand(groups, lambda, targets.len()),
        })
    });
    Ok(NirPath {
        points: merged,
        knots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(targets: &[f64]) -> Vec<CalibrationPoint> {
        targets
            .iter()
            .enumerate()
            .map(|(i, &t)| CalibrationPoint::new(i as f64, t))
            .collect()
    }

    #[test]
    fn monotone_targets_have_single_knot() {
        let path = nir_path(&pts(&[0.0, 0.3, 0.3, 1.0])).unwrap();
        assert_eq!(path.knots.len(), 1);
        assert_eq!(path.knots[0].lambda, 0.0);
        assert_eq!(path.knots[0].fit, vec![0.0, 0.3, 0.3, 1.0]);
        assert_eq!(path.knots[0].n_groups, 3);
    }

    #[test]
    fn two_point_violation_collides_at_half() {
        let path = nir_path(&pts(&[1.0, 0.0])).unwrap();
        let lambdas: Vec<f64> = path.knots.iter().map(|k| k.lambda).collect();
        assert_eq!(lambdas, vec![0.0, 0.5]);
        assert_eq!(path.knots[1].fit, vec![0.5, 0.5]);
        // Halfway along, each value has moved by λ.
        let mid = path.fit_at(0.25);
        assert!((mid[0] - 0.75).abs() < 1e-15 && (mid[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn simultaneous_collisions_form_one_knot() {
        let path = nir_path(&pts(&[1.0, 0.5, 0.0])).unwrap();
        let lambdas: Vec<f64> = path.knots.iter().map(|k| k.lambda).collect();
        assert_eq!(lambdas, vec![0.0, 0.5]);
        assert_eq!(path.knots[1].n_groups, 1);
    }

    #[test]
    fn rising_and_falling_neighbours_meet() {
        // Group 2 rises and group 3 falls before the outer violations close.
        let path = nir_path(&pts(&[1.0, 0.4, 0.6, 0.0])).unwrap();
        assert!((path.knots[1].lambda - 0.1).abs() < 1e-12);
        let last = path.knots.last().unwrap();
        assert!(last.fit.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }
}

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};

/// Gaussian naive Bayes with class-frequency priors.
///
/// Class-conditional variances are maximum-likelihood estimates, floored at
/// `1e-9` times the feature's overall training variance (and never below
/// `1e-12`) so constant-within-class features stay finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Indexed by class: `[negative, positive]`.
    pub log_priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

impl GaussianNb {
    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn log_joint(&self, class: usize, x: &[f64]) -> f64 {
        self.log_priors[class]
            + x.iter()
                .zip(&self.means[class])
                .zip(&self.variances[class])
                .map(|((&v, &m), &s2)| log_normal(v, m, s2))
                .sum::<f64>()
    }

    /// Posterior probability of the positive class.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.log_joint(1, x) - self.log_joint(0, x);
        // Logistic of the log-odds, evaluated without overflow on either side.
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    }
}

pub fn fit_naive_bayes(ds: &Dataset) -> Result<GaussianNb> {
    if !ds.has_both_classes() {
        return Err(CalibError::SingleClass);
    }
    let n = ds.n_samples() as f64;
    let p = ds.n_features();
    let mut floors = Vec::with_capacity(p);
    for j in 0..p {
        let mean = ds.rows().map(|r| r[j]).sum::<f64>() / n;
        let var = ds.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        floors.push((1e-9 * var).max(1e-12));
    }
    let mut log_priors = [0.0; 2];
    let mut means: [Vec<f64>; 2] = [vec![0.0; p], vec![0.0; p]];
    let mut variances: [Vec<f64>; 2] = [vec![0.0; p], vec![0.0; p]];
    for class in 0..2u8 {
        let c = usize::from(class);
        let idx = ds.class_indices(class);
        let m = idx.len() as f64;
        log_priors[c] = (m / n).ln();
        for j in 0..p {
            let mean = idx.iter().map(|&i| ds.value(i, j)).sum::<f64>() / m;
            let var = idx.iter().map(|&i| (ds.value(i, j) - mean).powi(2)).sum::<f64>() / m;
            means[c][j] = mean;
            variances[c][j] = var.max(floors[j]);
        }
    }
    Ok(GaussianNb {
        log_priors,
        means,
        variances,
    })
}

//! Two-sample t-tests for comparing fold-level metrics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{CalibError, Result};

/// Significance level used for table markers.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    WelchUnpaired,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub variant: TestVariant,
}

impl TTestResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Student-t cumulative distribution function.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom must be positive")
        .cdf(t)
}

/// Two-sided p-value for statistic `t` with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("degrees of freedom must be positive");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(CalibError::InvalidArgument(format!("non-finite sample value {v}"))),
        None => Ok(()),
    }
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(CalibError::InvalidArgument(format!(
            "each sample needs at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let variant = TestVariant::WelchUnpaired;
    if se2 == 0.0 {
        // Both samples constant: the statistic is 0 or unbounded.
        let diff = ma - mb;
        let (t, p) = if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTestResult {
            t_statistic: t,
            degrees_of_freedom: na + nb - 2.0,
            p_value: p,
            variant,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: two_sided_p(t, df),
        variant,
    })
}

/// Paired t-test: a one-sample test on `a − b` with `n − 1` degrees of freedom.
///
/// Identical inputs give `t = 0, p = 1`. Constant nonzero differences have no
/// defined statistic and return [`CalibError::DegenerateDifferences`].
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(CalibError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(CalibError::InvalidArgument(format!(
            "paired test needs at least 2 pairs, got {}",
            a.len()
        )));
    }
    check_finite(a)?;
    check_finite(b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let (md, vd) = mean_var(&d);
    let df = n - 1.0;
    if vd == 0.0 {
        if md == 0.0 {
            return Ok(TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
                variant: TestVariant::Paired,
            });
        }
        return Err(CalibError::DegenerateDifferences(md));
    }
    let t = md / (vd / n).sqrt();
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: two_sided_p(t, df),
        variant: TestVariant::Paired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 4.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn shifted_by_one() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t_statistic + 1.0).abs() < 1e-12);
        assert!((r.degrees_of_freedom - 8.0).abs() < 1e-12);
        assert!((r.p_value - 0.3465935070873343).abs() < 1e-9);
    }

    #[test]
    fn antisymmetric() {
        let a = [0.1, 0.4, 0.35, 0.2];
        let b = [0.5, 0.45, 0.6, 0.3, 0.52];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert_eq!(ab.t_statistic, -ba.t_statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn constant_samples() {
        let r = welch_t_test(&[1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.t_statistic, f64::NEG_INFINITY);
        assert_eq!(r.p_value, 0.0);
        let r = welch_t_test(&[3.0, 3.0], &[3.0, 3.0]).unwrap();
        assert_eq!((r.t_statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn degenerate_differences() {
        let b = [1.0, 5.0, 2.0];
        let a: Vec<f64> = b.iter().map(|v| v + 0.5).collect();
        assert!(matches!(
            paired_t_test(&a, &b),
            Err(CalibError::DegenerateDifferences(_))
        ));
    }

    #[test]
    fn bad_sizes() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
        assert!(welch_t_test(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }
}

//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

/// Weighted monotone least-squares projection by exhaustive search over
/// contiguous block partitions. The optimum is a partition into blocks
/// valued at their weighted means, so the best non-decreasing candidate is
/// the projection. Exponential in `y.len()`; meant for n ≤ 10.
pub fn brute_force_isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for end in 1..=n {
            let cut = end == n || mask & (1 << (end - 1)) != 0;
            if cut {
                let ws: f64 = w[start..end].iter().sum();
                let m = (start..end).map(|i| w[i] * y[i]).sum::<f64>() / ws;
                fit.extend(std::iter::repeat_n(m, end - start));
                start = end;
            }
        }
        if fit.windows(2).any(|p| p[0] > p[1] + 1e-15) {
            continue;
        }
        let rss: f64 = (0..n).map(|i| w[i] * (y[i] - fit[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| rss < *b) {
            best = Some((rss, fit));
        }
    }
    best.expect("a single block is always feasible").1
}

/// Near-isotonic fit at one λ by coordinate ascent on the dual,
///
/// ```text
/// max_{0 ≤ u ≤ λ}  uᵀ D y − ½ uᵀ D W⁻¹ Dᵀ u,   β = y − W⁻¹ Dᵀ u,
/// ```
///
/// with (D β)_i = β_i − β_{i+1}. Runs until a sweep changes no dual
/// coordinate by more than 1e-15.
pub fn near_isotonic_dual(y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let m = n - 1;
    let dy: Vec<f64> = (0..m).map(|i| y[i] - y[i + 1]).collect();
    let diag: Vec<f64> = (0..m).map(|i| 1.0 / w[i] + 1.0 / w[i + 1]).collect();
    let mut u = vec![0.0; m];
    for _ in 0..2_000_000 {
        let mut change: f64 = 0.0;
        for i in 0..m {
            let mut r = dy[i];
            if i > 0 {
                r += u[i - 1] / w[i];
            }
            if i + 1 < m {
                r += u[i + 1] / w[i + 1];
            }
            let new = (r / diag[i]).clamp(0.0, lambda);
            change = change.max((new - u[i]).abs());
            u[i] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    (0..n)
        .map(|k| {
            let right = if k < m { u[k] } else { 0.0 };
            let left = if k > 0 { u[k - 1] } else { 0.0 };
            y[k] - (right - left) / w[k]
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The core crate's directory. Resolved through the parent directory
/// because this module is also compiled into the acceptance crate.
fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("..").join("core")
}

pub fn data_dir() -> PathBuf {
    core_dir().join("data")
}

pub fn fixture_dir() -> PathBuf {
    core_dir().join("tests").join("data")
}

/// One line of the t-test oracle fixture.
pub struct TTestCase {
    pub variant: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn ttest_cases() -> Vec<TTestCase> {
    let mut reader = csv::Reader::from_path(fixture_dir().join("ttest_oracle.csv")).unwrap();
    let parse_list = |s: &str| s.split(';').map(|v| v.parse().unwrap()).collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            TTestCase {
                variant: r[0].to_owned(),
                a: parse_list(&r[1]),
                b: parse_list(&r[2]),
                t: r[3].parse().unwrap(),
                df: r[4].parse().unwrap(),
                p: r[5].parse().unwrap(),
            }
        })
        .collect()
}

/// (t, df, cdf) rows of the Student-t CDF oracle grid.
pub fn t_cdf_grid() -> Vec<(f64, f64, f64)> {
    let mut reader = csv::Reader::from_path(fixture_dir().join("t_cdf_oracle.csv")).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect()
}

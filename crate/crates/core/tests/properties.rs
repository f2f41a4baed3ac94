mod common;

use proptest::prelude::*;

use calib::calibrators::{
    binning_fit, enir_fit, nir_path, pava, pava_fit, platt_fit, CalibrationPoint, Calibrator,
};
use calib::classifiers::fit_naive_bayes;
use calib::datagen::{dgg_group, DggConfig};
use calib::dataset::{split_calibration_indices, standardize, stratified_k_fold, Dataset};
use calib::metrics::{classification_rate, logloss, mse, select_threshold};
use calib::stats::{two_sided_p, welch_t_test};

use common::{brute_force_isotonic, max_abs_diff, near_isotonic_dual};

fn targets_and_weights(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(0.5..=2.0f64, n),
        )
    })
}

fn points(y: &[f64], w: &[f64]) -> Vec<CalibrationPoint> {
    y.iter()
        .zip(w)
        .enumerate()
        .map(|(i, (&t, &wt))| CalibrationPoint::weighted(i as f64 / 10.0, t, wt))
        .collect()
}

fn labelled_points(max_n: usize) -> impl Strategy<Value = Vec<CalibrationPoint>> {
    prop::collection::vec((0.0..=1.0f64, any::<bool>()), 2..=max_n).prop_map(|v| {
        v.into_iter()
            .map(|(s, y)| CalibrationPoint::new((s * 50.0).round() / 50.0, f64::from(u8::from(y))))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pava_is_the_monotone_projection((y, w) in targets_and_weights(8)) {
        let fit = pava(&y, &w);
        prop_assert!(max_abs_diff(&fit, &brute_force_isotonic(&y, &w)) < 1e-9);
    }

    #[test]
    fn pava_is_monotone_idempotent_and_mean_preserving((y, w) in targets_and_weights(30)) {
        let fit = pava(&y, &w);
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(max_abs_diff(&pava(&fit, &w), &fit) < 1e-12);
        let mean = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((mean(&fit) - mean(&y)).abs() < 1e-9);
    }

    #[test]
    fn nir_knots_solve_the_penalized_problem((y, w) in targets_and_weights(6)) {
        let path = nir_path(&points(&y, &w)).unwrap();
        for knot in &path.knots {
            let oracle = near_isotonic_dual(&y, &w, knot.lambda);
            prop_assert!(max_abs_diff(&knot.fit, &oracle) < 1e-7, "λ = {}", knot.lambda);
        }
        let last = &path.knots.last().unwrap().fit;
        prop_assert!(max_abs_diff(last, &pava(&y, &w)) < 1e-9);
        prop_assert!(path.knots.windows(2).all(|k| k[0].lambda < k[1].lambda));
        prop_assert!(path.knots.windows(2).all(|k| k[0].n_groups >= k[1].n_groups));
    }

    #[test]
    fn nir_path_is_linear_between_knots((y, w) in targets_and_weights(6), frac in 0.0..1.0f64) {
        let path = nir_path(&points(&y, &w)).unwrap();
        let top = path.knots.last().unwrap().lambda;
        let lambda = frac * top * 1.2;
        let oracle = near_isotonic_dual(&y, &w, lambda);
        let fit = path.fit_at(lambda);
        prop_assert!(max_abs_diff(&fit, &oracle) < 1e-7);
        prop_assert!(path.objective(&fit, lambda) <= path.objective(&oracle, lambda) + 1e-9);
    }

    #[test]
    fn enir_weights_and_envelope(pts in labelled_points(60), probe in prop::collection::vec(-0.2..1.2f64, 10)) {
        let m = enir_fit(&pts).unwrap();
        prop_assert!(m.members.iter().all(|x| x.weight > 0.0));
        let total: f64 = m.members.iter().map(|x| x.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for s in probe {
            let p = m.predict(s);
            let members = m.member_predictions(s);
            let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn enir_on_monotone_targets_is_isotonic((mut y, w) in targets_and_weights(20)) {
        y.sort_by(f64::total_cmp);
        let pts = points(&y, &w);
        let m = enir_fit(&pts).unwrap();
        let iso = pava_fit(&pts).unwrap();
        prop_assert_eq!(m.members.len(), 1);
        prop_assert_eq!(m.members[0].weight, 1.0);
        for p in &pts {
            prop_assert!((m.predict(p.score) - iso.predict(p.score)).abs() < 1e-12);
        }
    }

    #[test]
    fn platt_orientation(pts in labelled_points(40)) {
        let pos: Vec<f64> = pts.iter().filter(|p| p.target == 1.0).map(|p| p.score).collect();
        let neg: Vec<f64> = pts.iter().filter(|p| p.target == 0.0).map(|p| p.score).collect();
        prop_assume!(!pos.is_empty() && !neg.is_empty());
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        if let Ok(m) = platt_fit(&pts) {
            if mean(&pos) > mean(&neg) + 1e-3 {
                prop_assert!(m.a < 0.0, "A = {}", m.a);
            }
            for s in [0.0, 0.5, 1.0] {
                let p = m.predict(s);
                prop_assert!(p > 0.0 && p < 1.0);
            }
        }
    }

    #[test]
    fn binning_values_are_bin_means(pts in labelled_points(60), bins in 1usize..6) {
        if let Ok(m) = binning_fit(&pts, bins) {
            prop_assert_eq!(m.values.len(), bins);
            prop_assert!(m.values.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(m.sizes.iter().max().unwrap() - m.sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn calibrators_round_trip_through_json(pts in labelled_points(30)) {
        let mut all = vec![Calibrator::Identity, Calibrator::Enir(enir_fit(&pts).unwrap())];
        if let Ok(m) = pava_fit(&pts) {
            all.push(Calibrator::Isotonic(m));
        }
        for c in all {
            let back = Calibrator::from_json(&c.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn logloss_is_bounded_by_the_clip(
        v in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..50),
        eps in 1e-12..0.49f64,
    ) {
        let probs: Vec<f64> = v.iter().map(|x| x.0).collect();
        let labels: Vec<u8> = v.iter().map(|x| u8::from(x.1)).collect();
        let ll = logloss(&probs, &labels, eps).unwrap();
        prop_assert!(ll >= 0.0 && ll <= -eps.ln() + 1e-12);
    }

    #[test]
    fn logloss_falls_as_true_class_probability_rises(
        v in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..20),
        idx in any::<prop::sample::Index>(),
        bump in 0.0..1.0f64,
    ) {
        let probs: Vec<f64> = v.iter().map(|x| x.0).collect();
        let labels: Vec<u8> = v.iter().map(|x| u8::from(x.1)).collect();
        let i = idx.index(probs.len());
        let mut better = probs.clone();
        better[i] = if labels[i] == 1 {
            probs[i] + bump * (1.0 - probs[i])
        } else {
            probs[i] * (1.0 - bump)
        };
        prop_assert!(logloss(&better, &labels, 1e-6).unwrap() <= logloss(&probs, &labels, 1e-6).unwrap() + 1e-12);
    }

    #[test]
    fn mse_is_bounded_and_complement_symmetric(v in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..50)) {
        let probs: Vec<f64> = v.iter().map(|x| x.0).collect();
        let labels: Vec<u8> = v.iter().map(|x| u8::from(x.1)).collect();
        let m = mse(&probs, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        let flipped_p: Vec<f64> = probs.iter().map(|p| 1.0 - p).collect();
        let flipped_y: Vec<u8> = labels.iter().map(|y| 1 - y).collect();
        prop_assert!((mse(&flipped_p, &flipped_y).unwrap() - m).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_optimal_on_a_dense_grid(v in prop::collection::vec((0.0..=1.0f64, any::<bool>()), 1..40)) {
        let probs: Vec<f64> = v.iter().map(|x| (x.0 * 100.0).round() / 100.0).collect();
        let labels: Vec<u8> = v.iter().map(|x| u8::from(x.1)).collect();
        let t = select_threshold(&probs, &labels).unwrap();
        let best = classification_rate(&probs, &labels, t).unwrap();
        // Probabilities sit on a 0.01 grid, so a 0.001 grid hits every
        // distinct decision.
        for k in 0..=1000 {
            let cr = classification_rate(&probs, &labels, k as f64 / 1000.0).unwrap();
            prop_assert!(cr <= best + 1e-12);
        }
        let base = classification_rate(&probs, &labels, 0.0).unwrap();
        prop_assert!(best >= base);
    }

    #[test]
    fn dgg_conserves_weight_and_smooths(pts in labelled_points(80), g in 1usize..15) {
        prop_assume!(pts.len() >= g);
        let grouped = dgg_group(&pts, &DggConfig { group_size: g }).unwrap();
        let total: f64 = grouped.iter().map(|p| p.weight).sum();
        prop_assert!((total - pts.len() as f64).abs() < 1e-9);
        prop_assert!(grouped.windows(2).all(|w| w[0].score <= w[1].score));
        prop_assert!(grouped.iter().all(|p| (0.0..=1.0).contains(&p.target)));
        // Mixed groups never produce an exact 0 or 1.
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
        let mut start = 0;
        for p in &grouped {
            let size = p.weight as usize;
            let group = &sorted[start..start + size];
            let mixed = group.iter().any(|q| q.target == 1.0) && group.iter().any(|q| q.target == 0.0);
            if mixed {
                prop_assert!(p.target > 0.0 && p.target < 1.0);
            }
            start += size;
        }
    }

    #[test]
    fn welch_invariants(
        a in prop::collection::vec(-5.0..5.0f64, 2..15),
        b in prop::collection::vec(-5.0..5.0f64, 2..15),
    ) {
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-15);
        let lo = (a.len().min(b.len()) - 1) as f64;
        let hi = (a.len() + b.len() - 2) as f64;
        prop_assert!(ab.degrees_of_freedom >= lo - 1e-9 && ab.degrees_of_freedom <= hi + 1e-9);
    }

    #[test]
    fn p_value_decreases_in_abs_t(t in 0.0..20.0f64, dt in 0.0..5.0f64, df in 1.0..60.0f64) {
        prop_assert!(two_sided_p(t + dt, df) <= two_sided_p(t, df) + 1e-15);
        prop_assert_eq!(two_sided_p(-t, df), two_sided_p(t, df));
    }

    #[test]
    fn folds_are_stratified_and_balanced(n_pos in 30usize..80, n_neg in 30usize..80, k in 2usize..10, seed in any::<u64>()) {
        let labels: Vec<u8> = (0..n_pos + n_neg).map(|i| u8::from(i < n_pos)).collect();
        let features: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
        let ds = Dataset::new("t", features, labels, vec!["x".into()]).unwrap();
        let plan = stratified_k_fold(&ds, k, seed).unwrap();
        let sizes = plan.fold_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n_pos + n_neg);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..k {
            let pos = plan.test_indices(f).iter().filter(|&&i| ds.label(i) == 1).count();
            prop_assert!(pos == n_pos / k || pos == n_pos / k + 1);
        }
        let (model, cal) = split_calibration_indices(&ds.subset(&plan.train_indices(0)), 0.1, seed).unwrap();
        let n_train = plan.train_indices(0).len();
        prop_assert_eq!(cal.len(), n_train / 10);
        prop_assert_eq!(model.len() + cal.len(), n_train);
    }

    #[test]
    fn standardization_uses_training_rows(
        rows in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 3), 4..30),
        test in prop::collection::vec(-100.0..100.0f64, 3),
    ) {
        let labels: Vec<u8> = (0..rows.len()).map(|i| (i % 2) as u8).collect();
        let train = Dataset::from_rows("t", &rows, labels).unwrap();
        let held = Dataset::from_rows("h", std::slice::from_ref(&test), vec![0]).unwrap();
        let Ok((s, others, params)) = standardize(&train, &[&held]) else {
            return Ok(());
        };
        let n = s.n_samples() as f64;
        for j in 0..s.n_features() {
            let col: Vec<f64> = s.rows().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
            let src = params.kept_columns[j];
            let expect = (test[src] - params.means[j]) / params.std_devs[j];
            prop_assert!((others[0].row(0)[j] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn naive_bayes_flip_complement(
        rows in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 6..30),
        probe in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let labels: Vec<u8> = (0..rows.len()).map(|i| (i % 2) as u8).collect();
        let flipped: Vec<u8> = labels.iter().map(|y| 1 - y).collect();
        let ds = Dataset::from_rows("t", &rows, labels).unwrap();
        let dsf = Dataset::from_rows("t", &rows, flipped).unwrap();
        let s = fit_naive_bayes(&ds).unwrap().score(&probe);
        let sf = fit_naive_bayes(&dsf).unwrap().score(&probe);
        prop_assert!((s + sf - 1.0).abs() < 1e-9);
    }
}

#[test]
fn enir_counts_ties_in_the_residual() {
    // Forty points on only four distinct scores. Without the spread inside
    // each tie the merged points look noise-free and the most complex
    // member would dominate.
    let mut pts = Vec::new();
    for (s, pos) in [(0.1, 3), (0.2, 6), (0.3, 4), (0.4, 8)] {
        for i in 0..10 {
            pts.push(CalibrationPoint::new(s, f64::from(u8::from(i < pos))));
        }
    }
    let m = enir_fit(&pts).unwrap();
    let rss_floor: f64 = [0.3f64, 0.6, 0.4, 0.8].iter().map(|p| 10.0 * p * (1.0 - p)).sum();
    for member in &m.members {
        assert!(member.rss >= rss_floor - 1e-9, "rss {}", member.rss);
    }
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};
use crate::rng;

/// Assignment of every sample to one of `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment. Members of each class are shuffled and
/// dealt round-robin into folds; the dealing position carries over from the
/// negative class to the positive class so total fold sizes differ by at
/// most one and any remainder lands in the lowest-index folds.
pub fn stratified_k_fold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(CalibError::InvalidArgument(format!("k = {k}, need at least 2 folds")));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut assignments = vec![0usize; ds.n_samples()];
    let mut position = 0usize;
    for class in [0u8, 1] {
        let mut members = ds.class_indices(class);
        if members.len() < k {
            return Err(CalibError::ClassTooSmall {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = position % k;
            position += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Stratified partition of `train` into (model-training, calibration) index
/// sets, each sorted. The calibration part holds floor(fraction * n) rows.
pub fn split_calibration_indices(
    train: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CalibError::InvalidArgument(format!(
            "calibration fraction {fraction} outside (0, 1)"
        )));
    }
    if !train.has_both_classes() {
        return Err(CalibError::SingleClass);
    }
    let n = train.n_samples();
    // The epsilon guards against products like 0.1 * 70 landing just below
    // an integer.
    let n_cal = (fraction * n as f64 + 1e-9).floor() as usize;
    let mut pos = train.class_indices(1);
    let mut neg = train.class_indices(0);
    let mut n_cal_pos = ((n_cal * pos.len()) as f64 / n as f64).round() as usize;
    n_cal_pos = n_cal_pos.min(pos.len()).min(n_cal);
    if n_cal - n_cal_pos > neg.len() {
        n_cal_pos = n_cal - neg.len();
    }
    let n_cal_neg = n_cal - n_cal_pos;
    if n_cal == 0 || n_cal_pos == 0 || n_cal_neg == 0 {
        return Err(CalibError::InvalidArgument(format!(
            "calibration split of {n_cal} rows ({n_cal_pos} positive, {n_cal_neg} negative) \
             would be empty or single-class"
        )));
    }
    let mut rng = rng::stream(seed, &[]);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut cal: Vec<usize> = pos[..n_cal_pos]
        .iter()
        .chain(&neg[..n_cal_neg])
        .copied()
        .collect();
    let mut model: Vec<usize> = pos[n_cal_pos..]
        .iter()
        .chain(&neg[n_cal_neg..])
        .copied()
        .collect();
    cal.sort_unstable();
    model.sort_unstable();
    Ok((model, cal))
}

/// Split off a stratified calibration set; see [`split_calibration_indices`].
pub fn split_calibration(train: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (model, cal) = split_calibration_indices(train, fraction, seed)?;
    Ok((train.subset(&model), train.subset(&cal)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(n_pos: usize, n_neg: usize) -> Dataset {
        let n = n_pos + n_neg;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| u8::from(i < n_pos)).collect();
        Dataset::from_rows("d", &rows, labels).unwrap()
    }

    #[test]
    fn blood_donation_sized_folds() {
        let ds = labelled(178, 570);
        let plan = stratified_k_fold(&ds, 10, 3).unwrap();
        for f in 0..10 {
            let test = plan.test_indices(f);
            let pos = test.iter().filter(|&&i| ds.label(i) == 1).count();
            assert!((17..=18).contains(&pos), "fold {f}: {pos} positives");
            assert!((74..=75).contains(&test.len()));
        }
        // The remainder (748 mod 10 = 8) goes to the first folds.
        assert_eq!(plan.fold_sizes(), vec![75, 75, 75, 75, 75, 75, 75, 75, 74, 74]);
    }

    #[test]
    fn exact_divisibility() {
        let ds = labelled(10, 10);
        let plan = stratified_k_fold(&ds, 10, 1).unwrap();
        for f in 0..10 {
            let test = plan.test_indices(f);
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| ds.label(i) == 1).count(), 1);
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let ds = labelled(30, 50);
        let a = stratified_k_fold(&ds, 5, 9).unwrap();
        assert_eq!(a, stratified_k_fold(&ds, 5, 9).unwrap());
        assert_ne!(a.assignments, stratified_k_fold(&ds, 5, 10).unwrap().assignments);
    }

    #[test]
    fn small_class_is_named() {
        let ds = labelled(3, 50);
        match stratified_k_fold(&ds, 5, 0) {
            Err(CalibError::ClassTooSmall { class, count, k }) => {
                assert_eq!((class, count, k), (1, 3, 5))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(stratified_k_fold(&ds, 1, 0).is_err());
    }

    #[test]
    fn calibration_sizes_follow_floor() {
        // Fold training sets of 673 and 949 rows.
        let (model, cal) = split_calibration(&labelled(162, 511), 0.10, 4).unwrap();
        assert_eq!(cal.n_samples(), 67);
        assert_eq!(model.n_samples(), 606);
        let (_, cal) = split_calibration(&labelled(304, 645), 0.10, 4).unwrap();
        assert_eq!(cal.n_samples(), 94);
    }

    #[test]
    fn half_split_of_balanced_set() {
        let ds = labelled(5, 5);
        let (model, cal) = split_calibration_indices(&ds, 0.5, 2).unwrap();
        assert_eq!((model.len(), cal.len()), (5, 5));
        let cal_pos = cal.iter().filter(|&&i| ds.label(i) == 1).count();
        assert!((2..=3).contains(&cal_pos));
        let mut all: Vec<usize> = model.iter().chain(&cal).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_calibration_split() {
        assert!(split_calibration(&labelled(2, 3), 0.1, 0).is_err());
        assert!(split_calibration(&labelled(1, 60), 0.1, 0).is_err());
        assert!(split_calibration(&labelled(10, 10), 1.0, 0).is_err());
        assert!(split_calibration(&labelled(0, 10), 0.5, 0).is_err());
    }
}

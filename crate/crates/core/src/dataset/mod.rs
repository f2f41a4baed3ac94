//! Dataset representation and everything that reshapes one: CSV ingestion,
//! standardization, stratified folds, calibration splits, the synthetic
//! ground-truth generator and class subsampling.

mod load;
mod preprocess;
mod split;
mod synthetic;

pub use load::{load_csv, write_csv};
pub use preprocess::{standardize, StandardizationParams, NZV_THRESHOLD};
pub use split::{split_calibration, split_calibration_indices, stratified_k_fold, FoldPlan};
pub use synthetic::{
    derivative_features, make_synthetic, subsample_class, write_truth_csv, SyntheticTruth,
    NEGATIVE_MEAN, POSITIVE_MEAN,
};

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// Binary classification data. Features are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    features: Vec<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    n_features: usize,
    /// Known posterior P(y = 1 | x) per row, available for synthetic data.
    true_probs: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(CalibError::NoFeatureColumns);
        }
        if features.len() != labels.len() * n_features {
            return Err(CalibError::InvalidDataset(format!(
                "{} feature values do not fill {} rows of {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(CalibError::InvalidDataset(format!("label {bad} is not 0 or 1")));
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(CalibError::InvalidDataset(format!("non-finite feature value {v}")));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
            n_features,
            true_probs: None,
        })
    }

    /// Build from row vectors; convenient in tests and small tools.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<u8>,
    ) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(CalibError::InvalidDataset("ragged rows".into()));
        }
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Dataset::new(name, rows.concat(), labels, names)
    }

    pub fn with_true_probs(mut self, true_probs: Vec<f64>) -> Result<Self> {
        if true_probs.len() != self.n_samples() {
            return Err(CalibError::InvalidDataset(
                "true probability vector length differs from sample count".into(),
            ));
        }
        self.true_probs = Some(true_probs);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn true_probs(&self) -> Option<&[f64]> {
        self.true_probs.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn class_count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&y| y == class).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.class_count(1) as f64 / self.n_samples() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.class_count(1);
        pos > 0 && pos < self.n_samples()
    }

    /// Indices of rows belonging to `class`, in row order.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.n_samples()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Rows at `indices`, in the given order. Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            name: self.name.clone(),
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            n_features: self.n_features,
            true_probs: self
                .true_probs
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }

    /// Keep only the listed columns, in the given order.
    pub(crate) fn select_columns(&self, columns: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(self.n_samples() * columns.len());
        for row in self.rows() {
            features.extend(columns.iter().map(|&j| row[j]));
        }
        Dataset {
            name: self.name.clone(),
            features,
            labels: self.labels.clone(),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            n_features: columns.len(),
            true_probs: self.true_probs.clone(),
        }
    }

    pub(crate) fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let p = self.n_features;
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % p, v))
            .collect();
        Dataset {
            features,
            ..self.clone()
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Dataset {
        self.name = name.into();
        self
    }
}

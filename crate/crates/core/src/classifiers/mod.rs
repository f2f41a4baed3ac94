//! Classifiers that produce a positive-class score in [0, 1].

mod forest;
mod naive_bayes;

pub use forest::{
    fit_random_forest, oob_error, tune_mtry, DecisionTree, OobScores, RandomForest,
};
pub use naive_bayes::{fit_naive_bayes, GaussianNb};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    RandomForest,
}

impl ClassifierKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "NB",
            ClassifierKind::RandomForest => "RF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub rf_ntree: usize,
    /// `None` tunes mtry on the out-of-bag error.
    pub rf_mtry: Option<usize>,
    pub rf_min_node: usize,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn naive_bayes() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::NaiveBayes,
            ..Self::random_forest()
        }
    }

    pub fn random_forest() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::RandomForest,
            rf_ntree: 500,
            rf_mtry: None,
            rf_min_node: 1,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ClassifierSpec {
            seed,
            ..self.clone()
        }
    }

    pub(crate) fn validate(&self, n_features: usize) -> Result<()> {
        if self.rf_ntree == 0 {
            return Err(CalibError::InvalidArgument("rf_ntree must be at least 1".into()));
        }
        if let Some(m) = self.rf_mtry {
            if m == 0 || m > n_features {
                return Err(CalibError::InvalidArgument(format!(
                    "mtry {m} outside [1, {n_features}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedClassifier {
    NaiveBayes(GaussianNb),
    RandomForest(RandomForest),
}

impl TrainedClassifier {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedClassifier::NaiveBayes(m) => m.n_features(),
            TrainedClassifier::RandomForest(m) => m.n_features(),
        }
    }

    /// Positive-class score for one feature vector.
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(CalibError::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(match self {
            TrainedClassifier::NaiveBayes(m) => m.score(x),
            TrainedClassifier::RandomForest(m) => m.score(x),
        })
    }

    pub fn score_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ds.rows().map(|r| self.predict_score(r)).collect()
    }

    /// The mtry the forest was grown with, if this is a forest.
    pub fn mtry(&self) -> Option<usize> {
        match self {
            TrainedClassifier::RandomForest(m) => Some(m.mtry()),
            TrainedClassifier::NaiveBayes(_) => None,
        }
    }
}

/// Fit the classifier described by `spec`. Forests with `rf_mtry = None`
/// are tuned first; out-of-bag scores come back for forests only.
pub fn fit_classifier(
    ds: &Dataset,
    spec: &ClassifierSpec,
) -> Result<(TrainedClassifier, Option<OobScores>)> {
    match spec.kind {
        ClassifierKind::NaiveBayes => Ok((TrainedClassifier::NaiveBayes(fit_naive_bayes(ds)?), None)),
        ClassifierKind::RandomForest => {
            spec.validate(ds.n_features())?;
            let (forest, oob) = match spec.rf_mtry {
                Some(_) => fit_random_forest(ds, spec)?,
                None => {
                    let (_, forest, oob) = forest::tune_mtry_with_forest(ds, spec)?;
                    (forest, oob)
                }
            };
            Ok((TrainedClassifier::RandomForest(forest), Some(oob)))
        }
    }
}

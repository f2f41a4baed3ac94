//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CalibError>;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("file contains no data rows")]
    EmptyFile,

    #[error("label column '{0}' not present in header")]
    MissingColumn(String),

    #[error("no feature columns besides the label column")]
    NoFeatureColumns,

    #[error("non-numeric value '{value}' in column '{column}' at data row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column is not binary: found {} distinct values {found:?}", found.len())]
    NotBinary { found: Vec<String> },

    #[error("positive label '{0}' does not occur in the label column")]
    PositiveLabelAbsent(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("every feature has near-zero variance; no features remain")]
    NoFeaturesRemain,

    #[error("class {class} has {count} members, fewer than the {k} folds requested")]
    ClassTooSmall { class: u8, count: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("need at least {needed} calibration points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("non-finite score {0}")]
    NonFiniteScore(f64),

    #[error("Platt fit did not converge (A = {a}, B = {b}, gradient norm {grad_norm:e})")]
    PlattNonConvergence { a: f64, b: f64, grad_norm: f64 },

    #[error("data generation failed at iteration {iteration}: {source}")]
    DataGeneration {
        iteration: usize,
        #[source]
        source: Box<CalibError>,
    },

    #[error("paired differences are constant and nonzero ({0}); t statistic is undefined")]
    DegenerateDifferences(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("incomplete result grid, missing: {}", missing.join(", "))]
    IncompleteGrid { missing: Vec<String> },

    #[error("no result records")]
    EmptyRecords,

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CalibError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CalibError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's configuration rather than by
    /// a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            CalibError::Config(_)
                | CalibError::InvalidArgument(_)
                | CalibError::MissingFile(_)
                | CalibError::MissingColumn(_)
                | CalibError::NotBinary { .. }
                | CalibError::PositiveLabelAbsent(_)
                | CalibError::NoFeatureColumns
        )
    }
}

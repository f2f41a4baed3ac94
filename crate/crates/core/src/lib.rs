//! Post-hoc calibration of binary classifier scores.
//!
//! The crate covers the full pipeline: loading and splitting data, training
//! base classifiers, fitting calibrators (ENIR, isotonic, Platt, binning),
//! generating extra calibration data by Monte Carlo resampling, and a
//! cross-validated benchmark harness with significance testing.

pub mod calibrators;
pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod stats;

pub use error::{CalibError, Result};

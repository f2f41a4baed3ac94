use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrators::{
    enir_fit, platt_fit, points_from_labels, CalibrationPoint, Calibrator,
};
use crate::classifiers::{fit_classifier, ClassifierKind, ClassifierSpec, TrainedClassifier};
use crate::datagen::{dg_generate, dgg_group, DgConfig, DggConfig};
use crate::dataset::{
    load_csv, make_synthetic, split_calibration, standardize, stratified_k_fold, subsample_class,
    Dataset, StandardizationParams,
};
use crate::error::{CalibError, Result};
use crate::metrics::{select_threshold, MetricReport, DEFAULT_CLIP_EPSILON};
use crate::rng;
use crate::stats::TestVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Raw,
    Enir,
    EnirFull,
    DgEnir,
    DggEnir,
    EnirOob,
    Platt,
    PlattFull,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::Raw,
        ScenarioKind::Enir,
        ScenarioKind::EnirFull,
        ScenarioKind::DgEnir,
        ScenarioKind::DggEnir,
        ScenarioKind::EnirOob,
        ScenarioKind::Platt,
        ScenarioKind::PlattFull,
    ];

    /// Every scenario that applies to `kind`.
    pub fn defaults_for(kind: ClassifierKind) -> Vec<ScenarioKind> {
        Self::ALL
            .into_iter()
            .filter(|s| *s != ScenarioKind::EnirOob || kind == ClassifierKind::RandomForest)
            .collect()
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            ScenarioKind::Raw => "raw",
            ScenarioKind::Enir => "enir",
            ScenarioKind::EnirFull => "enir-full",
            ScenarioKind::DgEnir => "dg",
            ScenarioKind::DggEnir => "dgg",
            ScenarioKind::EnirOob => "oob",
            ScenarioKind::Platt => "platt",
            ScenarioKind::PlattFull => "platt-full",
        }
    }

    /// Name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Raw => "Raw",
            ScenarioKind::Enir => "ENIR",
            ScenarioKind::EnirFull => "ENIR full",
            ScenarioKind::DgEnir => "DG + ENIR",
            ScenarioKind::DggEnir => "DGG + ENIR",
            ScenarioKind::EnirOob => "ENIR OOB",
            ScenarioKind::Platt => "Platt",
            ScenarioKind::PlattFull => "Platt full",
        }
    }

    fn uses_full_model(self) -> bool {
        !matches!(self, ScenarioKind::Enir | ScenarioKind::Platt)
    }

    fn uses_dg(self) -> bool {
        matches!(self, ScenarioKind::DgEnir | ScenarioKind::DggEnir)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ScenarioKind {
    type Err = CalibError;

    /// Accepts the command-line names and the snake_case names.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| {
                k.cli_name() == s
                    || serde_json::to_value(k).ok().and_then(|v| v.as_str().map(|x| x == s))
                        == Some(true)
            })
            .ok_or_else(|| CalibError::Config(format!("unknown scenario '{s}'")))
    }
}

/// Which points pick the classification threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// The labelled points the calibrator was fitted on (DG points for DGG).
    #[default]
    FitPoints,
    /// The whole training fold, scored by the scenario's model and calibrator.
    TrainingFold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        label_column: String,
        positive_label: String,
    },
    Synthetic {
        n_per_class: usize,
    },
}

impl DataSource {
    /// Load or generate the dataset. Synthetic data draws from the master
    /// seed's synthetic stream.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DataSource::Csv {
                path,
                label_column,
                positive_label,
            } => load_csv(path, label_column, positive_label),
            DataSource::Synthetic { n_per_class } => Ok(make_synthetic(
                *n_per_class,
                rng::derive_seed(seed, &[rng::PURPOSE_SYNTHETIC]),
            )?
            .0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub classifier: ClassifierSpec,
    pub scenarios: Vec<ScenarioKind>,
    pub folds: usize,
    pub cal_fraction: f64,
    pub dg_points: usize,
    pub dg_holdout_fraction: f64,
    pub dgg: DggConfig,
    pub clip_epsilon: f64,
    pub seed: u64,
    pub threshold_source: ThresholdSource,
    pub test: TestVariant,
}

impl ExperimentConfig {
    pub fn new(source: DataSource, classifier: ClassifierSpec) -> Self {
        let scenarios = ScenarioKind::defaults_for(classifier.kind);
        ExperimentConfig {
            source,
            classifier,
            scenarios,
            folds: 10,
            cal_fraction: 0.1,
            dg_points: 2000,
            dg_holdout_fraction: 0.1,
            dgg: DggConfig::default(),
            clip_epsilon: DEFAULT_CLIP_EPSILON,
            seed: 0,
            threshold_source: ThresholdSource::FitPoints,
            test: TestVariant::WelchUnpaired,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CalibError::Config(msg));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        for (name, f) in [
            ("calibration fraction", self.cal_fraction),
            ("DG holdout fraction", self.dg_holdout_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} {f} outside (0, 1)"));
            }
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 0.5) {
            return bad(format!("clip epsilon {} outside (0, 0.5)", self.clip_epsilon));
        }
        if self.scenarios.is_empty() {
            return bad("no scenarios selected".into());
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..i].contains(s) {
                return bad(format!("scenario '{s}' listed twice"));
            }
        }
        if self.classifier.kind != ClassifierKind::RandomForest
            && self.scenarios.contains(&ScenarioKind::EnirOob)
        {
            return bad("scenario 'oob' needs the random forest classifier".into());
        }
        if self.dg_points == 0 || self.dgg.group_size == 0 {
            return bad("DG points and DGG group size must be at least 1".into());
        }
        if self.scenarios.contains(&ScenarioKind::DggEnir) && self.dgg.group_size > self.dg_points
        {
            return bad(format!(
                "DGG group size {} exceeds DG points {}",
                self.dgg.group_size, self.dg_points
            ));
        }
        if self.classifier.rf_ntree == 0 || self.classifier.rf_mtry == Some(0) {
            return bad("rf_ntree and rf_mtry must be at least 1".into());
        }
        Ok(())
    }
}

/// Metrics for one (dataset, classifier, scenario, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub scenario: ScenarioKind,
    pub fold: usize,
    pub metrics: MetricReport,
    /// Wall-clock seconds for training, data generation and calibration.
    /// Not part of `results.json`, which must be reproducible byte for
    /// byte; it is written to `timings.csv` instead.
    #[serde(skip)]
    pub seconds: f64,
}

/// Standardized training and test parts of one fold. Scaling parameters
/// come from the training rows alone.
pub fn prepare_fold(
    ds: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<(Dataset, Dataset, StandardizationParams)> {
    let (train, mut others, params) = standardize(&ds.subset(train_idx), &[&ds.subset(test_idx)])?;
    Ok((train, others.remove(0), params))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn labelled(model: &TrainedClassifier, ds: &Dataset) -> Result<Vec<CalibrationPoint>> {
    Ok(points_from_labels(&model.score_dataset(ds)?, ds.labels()))
}

struct FittedModel {
    model: TrainedClassifier,
    seconds: f64,
    /// Out-of-bag points, forests only.
    oob: Option<Vec<CalibrationPoint>>,
}

fn fit_model(ds: &Dataset, spec: &ClassifierSpec) -> Result<FittedModel> {
    let ((model, oob), seconds) = timed(|| fit_classifier(ds, spec))?;
    let oob = oob.map(|o| {
        o.scores
            .iter()
            .zip(ds.labels())
            .filter_map(|(s, &y)| s.map(|s| CalibrationPoint::new(s, f64::from(y))))
            .collect()
    });
    Ok(FittedModel {
        model,
        seconds,
        oob,
    })
}

fn run_fold(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    train_idx: &[usize],
    test_idx: &[usize],
    fold: usize,
) -> Result<Vec<ResultRecord>> {
    let (train, test, _) = prepare_fold(ds, train_idx, test_idx)?;
    let derive = |purpose: u64| rng::derive_seed(cfg.seed, &[purpose, fold as u64]);
    let scenarios = &cfg.scenarios;

    let full = if scenarios.iter().any(|s| s.uses_full_model()) {
        Some(fit_model(&train, &cfg.classifier.with_seed(derive(rng::PURPOSE_FULL_MODEL)))?)
    } else {
        None
    };
    let split = if scenarios.iter().any(|s| !s.uses_full_model()) {
        let (model_part, cal_part) =
            split_calibration(&train, cfg.cal_fraction, derive(rng::PURPOSE_CAL_SPLIT))?;
        let fitted = fit_model(
            &model_part,
            &cfg.classifier.with_seed(derive(rng::PURPOSE_CAL_MODEL)),
        )?;
        let cal_points = labelled(&fitted.model, &cal_part)?;
        Some((fitted, cal_points))
    } else {
        None
    };
    let dg = match (&full, scenarios.iter().any(|s| s.uses_dg())) {
        (Some(full), true) => {
            // Refits inside DG reuse the tuned mtry instead of re-tuning.
            let mut classifier = cfg.classifier.clone();
            if let Some(m) = full.model.mtry() {
                classifier.rf_mtry = Some(m);
            }
            let dg_cfg = DgConfig {
                n_points: cfg.dg_points,
                holdout_fraction: cfg.dg_holdout_fraction,
                seed: derive(rng::PURPOSE_DG),
                classifier,
            };
            Some(timed(|| dg_generate(&train, &dg_cfg))?)
        }
        _ => None,
    };

    let full_train_points = match &full {
        Some(f) => Some(labelled(&f.model, &train)?),
        None => None,
    };
    let test_truth = test.true_probs();

    let mut records = Vec::with_capacity(scenarios.len());
    for &scenario in scenarios {
        let (fitted, base_seconds) = match scenario.uses_full_model() {
            true => {
                let f = full.as_ref().expect("full model fitted");
                (f, f.seconds)
            }
            false => {
                let (f, _) = split.as_ref().expect("split model fitted");
                (f, f.seconds)
            }
        };
        let dg_seconds = if scenario.uses_dg() {
            dg.as_ref().map_or(0.0, |d| d.1)
        } else {
            0.0
        };
        // (calibrator fitting points, threshold points)
        let (fit_points, threshold_points): (Vec<CalibrationPoint>, Vec<CalibrationPoint>) =
            match scenario {
                ScenarioKind::Raw | ScenarioKind::EnirFull | ScenarioKind::PlattFull => {
                    let p = full_train_points.clone().expect("full model fitted");
                    (p.clone(), p)
                }
                ScenarioKind::Enir | ScenarioKind::Platt => {
                    let p = split.as_ref().expect("split model fitted").1.clone();
                    (p.clone(), p)
                }
                ScenarioKind::DgEnir => {
                    let p = dg.as_ref().expect("DG points generated").0.clone();
                    (p.clone(), p)
                }
                ScenarioKind::DggEnir => {
                    let p = dg.as_ref().expect("DG points generated").0.clone();
                    (dgg_group(&p, &cfg.dgg)?, p)
                }
                ScenarioKind::EnirOob => {
                    let p = fitted.oob.clone().ok_or_else(|| {
                        CalibError::Config("out-of-bag scores need a random forest".into())
                    })?;
                    (p.clone(), p)
                }
            };
        let (calibrator, cal_seconds) = timed(|| {
            Ok(match scenario {
                ScenarioKind::Raw => Calibrator::Identity,
                ScenarioKind::Platt | ScenarioKind::PlattFull => {
                    Calibrator::Platt(platt_fit(&fit_points)?)
                }
                _ => Calibrator::Enir(enir_fit(&fit_points)?),
            })
        })?;

        let threshold = match cfg.threshold_source {
            ThresholdSource::FitPoints => {
                let scores: Vec<f64> = threshold_points.iter().map(|p| p.score).collect();
                let labels: Vec<u8> = threshold_points.iter().map(|p| u8::from(p.target >= 0.5)).collect();
                select_threshold(&calibrator.calibrate_all(&scores)?, &labels)?
            }
            ThresholdSource::TrainingFold => {
                let probs = calibrator.calibrate_all(&fitted.model.score_dataset(&train)?)?;
                select_threshold(&probs, train.labels())?
            }
        };
        let probs = calibrator.calibrate_all(&fitted.model.score_dataset(&test)?)?;
        let metrics =
            MetricReport::evaluate(&probs, test.labels(), threshold, cfg.clip_epsilon, test_truth)?;
        records.push(ResultRecord {
            dataset: ds.name.clone(),
            classifier: cfg.classifier.kind,
            scenario,
            fold,
            metrics,
            seconds: base_seconds + dg_seconds + cal_seconds,
        });
    }
    Ok(records)
}

/// Run every configured scenario under stratified k-fold cross validation
/// on an already loaded dataset. Records come back sorted by
/// (scenario order in the config, fold).
pub fn run_on_dataset(ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let plan = stratified_k_fold(ds, cfg.folds, rng::derive_seed(cfg.seed, &[rng::PURPOSE_FOLDS]))?;
    let per_fold: Vec<Vec<ResultRecord>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| run_fold(ds, cfg, &plan.train_indices(fold), &plan.test_indices(fold), fold))
        .collect::<Result<_>>()?;
    let mut records: Vec<ResultRecord> = per_fold.into_iter().flatten().collect();
    let rank = |s: ScenarioKind| cfg.scenarios.iter().position(|x| *x == s);
    records.sort_by_key(|r| (rank(r.scenario), r.fold));
    Ok(records)
}

/// Load the configured dataset and run the experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let ds = cfg.source.load(cfg.seed)?;
    run_on_dataset(&ds, cfg)
}

/// One class-subsampled dataset of the imbalance study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceDataset {
    pub name: String,
    pub reduced_class: u8,
    pub level: usize,
    pub n_samples: usize,
    pub positive_share: f64,
}

/// Build the 2 × |levels| subsampled datasets: each class in turn is
/// reduced to each level while the other class is kept whole.
pub fn imbalance_datasets(
    base: &Dataset,
    levels: &[usize],
    seed: u64,
) -> Result<Vec<(ImbalanceDataset, Dataset)>> {
    if levels.is_empty() {
        return Err(CalibError::Config("no imbalance levels given".into()));
    }
    let mut out = Vec::with_capacity(2 * levels.len());
    for class in [1u8, 0] {
        for &level in levels {
            let available = base.class_count(class);
            if level == 0 || level > available {
                return Err(CalibError::Config(format!(
                    "imbalance level {level} invalid for class {class} with {available} rows"
                )));
            }
            let sub_seed =
                rng::derive_seed(seed, &[rng::PURPOSE_SUBSAMPLE, u64::from(class), level as u64]);
            let tag = if class == 1 { "pos" } else { "neg" };
            let name = format!("{}_{tag}{level}", base.name);
            let ds = subsample_class(base, class, level, sub_seed)?.renamed(name.clone());
            out.push((
                ImbalanceDataset {
                    name,
                    reduced_class: class,
                    level,
                    n_samples: ds.n_samples(),
                    positive_share: ds.positive_fraction(),
                },
                ds,
            ));
        }
    }
    Ok(out)
}

/// Run the full scenario grid on every imbalance dataset.
pub fn run_imbalance_study(
    base: &Dataset,
    levels: &[usize],
    cfg: &ExperimentConfig,
) -> Result<(Vec<ImbalanceDataset>, Vec<ResultRecord>)> {
    cfg.validate()?;
    let sets = imbalance_datasets(base, levels, cfg.seed)?;
    let mut infos = Vec::with_capacity(sets.len());
    let mut records = Vec::new();
    for (info, ds) in sets {
        records.extend(run_on_dataset(&ds, cfg)?);
        infos.push(info);
    }
    Ok((infos, records))
}

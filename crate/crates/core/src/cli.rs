//! Command-line interface behind the `calib` binary.
//!
//! Exit codes: 0 on success, 1 for configuration errors (bad flags,
//! missing files, invalid combinations), 2 for failures while running.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibrators::{
    binning_fit, enir_fit, pava_fit, platt_fit, read_points_csv, write_points_csv, Calibrator,
};
use crate::classifiers::{ClassifierKind, ClassifierSpec};
use crate::datagen::{dg_generate, dgg_group, DgConfig, DggConfig};
use crate::dataset::{load_csv, make_synthetic, standardize, write_csv, write_truth_csv};
use crate::harness::{
    emit_reports, run_imbalance_study, run_on_dataset, summarize_with, write_imbalance_csv,
    DataSource, ExperimentConfig, ScenarioKind, ThresholdSource,
};
use crate::stats::{TestVariant, ALPHA};
use crate::error::{CalibError, Result};

#[derive(Parser)]
#[command(name = "calib", version, about = "Classifier calibration toolkit and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validated calibration experiment and write reports.
    Run(RunArgs),
    /// Write a synthetic two-Gaussian dataset and its true posteriors.
    Synth(SynthArgs),
    /// Generate DG (and optionally DGG) calibration points from a dataset.
    Datagen(DatagenArgs),
    /// Fit a calibrator on a score,target[,weight] CSV and save it as JSON.
    FitCalibrator(FitCalibratorArgs),
    /// Apply a saved calibrator to a CSV of scores.
    ApplyCalibrator(ApplyCalibratorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Nb,
    Rf,
}

impl From<ClassifierArg> for ClassifierKind {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::Nb => ClassifierKind::NaiveBayes,
            ClassifierArg::Rf => ClassifierKind::RandomForest,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    FitPoints,
    TrainingFold,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Welch,
    Paired,
}

#[derive(Args)]
struct LabelArgs {
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Label value of the positive class.
    #[arg(long, default_value = "1")]
    positive: String,
}

#[derive(Args)]
struct ClassifierArgs {
    #[arg(long, value_enum, default_value = "rf")]
    classifier: ClassifierArg,
    /// Trees per random forest.
    #[arg(long, default_value_t = 500)]
    rf_ntree: usize,
    /// Features tried per split; tuned on out-of-bag error when omitted.
    #[arg(long)]
    rf_mtry: Option<usize>,
}

impl ClassifierArgs {
    fn spec(&self) -> ClassifierSpec {
        ClassifierSpec {
            kind: self.classifier.into(),
            rf_ntree: self.rf_ntree,
            rf_mtry: self.rf_mtry,
            ..ClassifierSpec::random_forest()
        }
    }
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// CSV dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic dataset with this many rows per class.
    #[arg(long, num_args = 0..=1, default_missing_value = "100")]
    synthetic: Option<usize>,
    /// CSV dataset for the class-imbalance study.
    #[arg(long)]
    imbalance: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    label: LabelArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Comma-separated scenarios: raw, enir, enir-full, dg, dgg, oob, platt,
    /// platt-full. Defaults to every scenario valid for the classifier.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<String>>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Fraction of each training fold held out for separate calibration.
    #[arg(long, default_value_t = 0.1)]
    cal_fraction: f64,
    /// Calibration points generated by DG.
    #[arg(long, default_value_t = 2000)]
    dg_points: usize,
    /// Holdout fraction of each DG iteration.
    #[arg(long, default_value_t = 0.1)]
    dg_holdout: f64,
    /// Points per DGG group.
    #[arg(long, default_value_t = 20)]
    dgg_group: usize,
    /// Probability floor for logloss.
    #[arg(long, default_value_t = 1e-6)]
    clip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points used to choose the classification threshold.
    #[arg(long, value_enum, default_value = "fit-points")]
    threshold: ThresholdArg,
    /// Significance test for the summary markers.
    #[arg(long, value_enum, default_value = "welch")]
    test: TestArg,
    /// Class sizes for the imbalance study.
    #[arg(long, value_delimiter = ',', default_value = "100,50,25")]
    levels: Vec<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; a `label` column holds 1 for the positive class.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of true posteriors, one per row.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    label: LabelArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = 0.1)]
    holdout: f64,
    /// Group the generated points (DGG) with this group size.
    #[arg(long)]
    group: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibratorArg {
    Enir,
    Isotonic,
    Platt,
    Binning,
}

#[derive(Args)]
struct FitCalibratorArgs {
    /// CSV with columns score,target and optionally weight.
    #[arg(long)]
    points: PathBuf,
    #[arg(long, value_enum, default_value = "enir")]
    method: CalibratorArg,
    /// Number of bins for the binning calibrator.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyCalibratorArgs {
    /// Calibrator JSON written by fit-calibrator.
    #[arg(long)]
    model: PathBuf,
    /// CSV with a `score` column.
    #[arg(long)]
    scores: PathBuf,
    /// Output CSV with score,probability columns.
    #[arg(long)]
    out: PathBuf,
}

fn parse_scenarios(names: &Option<Vec<String>>, kind: ClassifierKind) -> Result<Vec<ScenarioKind>> {
    match names {
        None => Ok(ScenarioKind::defaults_for(kind)),
        Some(list) => list.iter().map(|s| s.parse()).collect(),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let spec = args.classifier.spec();
    let source = match (&args.source.data, args.source.synthetic, &args.source.imbalance) {
        (Some(path), _, _) | (_, _, Some(path)) => DataSource::Csv {
            path: path.clone(),
            label_column: args.label.label_col.clone(),
            positive_label: args.label.positive.clone(),
        },
        (_, Some(n), _) => DataSource::Synthetic { n_per_class: n },
        _ => return Err(CalibError::Config("no data source given".into())),
    };
    let cfg = ExperimentConfig {
        scenarios: parse_scenarios(&args.scenarios, spec.kind)?,
        folds: args.folds,
        cal_fraction: args.cal_fraction,
        dg_points: args.dg_points,
        dg_holdout_fraction: args.dg_holdout,
        dgg: DggConfig {
            group_size: args.dgg_group,
        },
        clip_epsilon: args.clip,
        seed: args.seed,
        threshold_source: match args.threshold {
            ThresholdArg::FitPoints => ThresholdSource::FitPoints,
            ThresholdArg::TrainingFold => ThresholdSource::TrainingFold,
        },
        test: match args.test {
            TestArg::Welch => TestVariant::WelchUnpaired,
            TestArg::Paired => TestVariant::Paired,
        },
        ..ExperimentConfig::new(source, spec)
    };
    cfg.validate()?;
    let ds = cfg.source.load(cfg.seed)?;
    let records = if args.source.imbalance.is_some() {
        let (infos, records) = run_imbalance_study(&ds, &args.levels, &cfg)?;
        std::fs::create_dir_all(&args.out).map_err(|e| CalibError::Io {
            path: args.out.clone(),
            source: e,
        })?;
        write_imbalance_csv(&infos, args.out.join("datasets.csv"))?;
        records
    } else {
        run_on_dataset(&ds, &cfg)?
    };
    let table = summarize_with(&records, cfg.test, ALPHA)?;
    let paths = emit_reports(&table, &records, &args.out)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let (ds, truth) = make_synthetic(args.n_per_class, args.seed)?;
    write_csv(&ds, &args.out)?;
    if let Some(path) = &args.truth {
        write_truth_csv(path, &truth.true_probs)?;
    }
    println!("wrote {} rows to {}", ds.n_samples(), args.out.display());
    Ok(())
}

fn datagen(args: DatagenArgs) -> Result<()> {
    let ds = load_csv(&args.data, &args.label.label_col, &args.label.positive)?;
    let (train, _, _) = standardize(&ds, &[])?;
    let cfg = DgConfig {
        n_points: args.points,
        holdout_fraction: args.holdout,
        seed: args.seed,
        classifier: args.classifier.spec(),
    };
    let mut points = dg_generate(&train, &cfg)?;
    if let Some(g) = args.group {
        points = dgg_group(&points, &DggConfig { group_size: g })?;
    }
    write_points_csv(&args.out, &points)?;
    println!("wrote {} points to {}", points.len(), args.out.display());
    Ok(())
}

fn fit_calibrator(args: FitCalibratorArgs) -> Result<()> {
    let points = read_points_csv(&args.points)?;
    let cal = match args.method {
        CalibratorArg::Enir => Calibrator::Enir(enir_fit(&points)?),
        CalibratorArg::Isotonic => Calibrator::Isotonic(pava_fit(&points)?),
        CalibratorArg::Platt => Calibrator::Platt(platt_fit(&points)?),
        CalibratorArg::Binning => Calibrator::Binning(binning_fit(&points, args.bins)?),
    };
    cal.save(&args.out)?;
    println!("wrote {} calibrator to {}", cal.kind_name(), args.out.display());
    Ok(())
}

fn apply_calibrator(args: ApplyCalibratorArgs) -> Result<()> {
    let cal = Calibrator::load(&args.model)?;
    if !args.scores.exists() {
        return Err(CalibError::MissingFile(args.scores.clone()));
    }
    let mut reader = csv::Reader::from_path(&args.scores)?;
    let col = reader
        .headers()?
        .iter()
        .position(|h| h == "score")
        .ok_or_else(|| CalibError::MissingColumn("score".into()))?;
    let mut writer = csv::Writer::from_path(&args.out)?;
    writer.write_record(["score", "probability"])?;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = &rec[col];
        let score: f64 = cell.trim().parse().map_err(|_| CalibError::NonNumeric {
            row: row + 1,
            column: "score".into(),
            value: cell.to_owned(),
        })?;
        writer.write_record([score.to_string(), cal.calibrate(score)?.to_string()])?;
    }
    writer.flush().map_err(|e| CalibError::Io {
        path: args.out.clone(),
        source: e,
    })
}

/// Size the global rayon pool from `CALIB_THREADS`. The pool can only be
/// built once per process, so later calls return the first outcome.
fn configure_threads() -> Result<()> {
    static OUTCOME: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    OUTCOME
        .get_or_init(|| {
            let Ok(value) = std::env::var("CALIB_THREADS") else {
                return Ok(());
            };
            let n: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("CALIB_THREADS must be a positive integer, got '{value}'"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("cannot size thread pool: {e}"))
        })
        .clone()
        .map_err(CalibError::Config)
}

/// Parse `args` (program name first) and run the selected command.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Datagen(a) => datagen(a),
        Command::FitCalibrator(a) => fit_calibrator(a),
        Command::ApplyCalibrator(a) => apply_calibrator(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ImbalanceDataset, ResultRecord};
use super::summary::{specific_baseline, Metric, MetricSummary, SummaryTable};
use crate::classifiers::ClassifierKind;
use crate::error::{CalibError, Result};
use crate::stats::TestVariant;

pub const RESULTS_JSON: &str = "results.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_MD: &str = "summary.md";
pub const TIMINGS_CSV: &str = "timings.csv";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CalibError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CalibError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_summary_csv(table: &SummaryTable, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["dataset", "classifier", "scenario", "folds"]
        .map(String::from)
        .into();
    for name in ["cr", "mse", "logloss", "mse_truth"] {
        header.extend(["mean", "sd", "flags"].map(|part| format!("{name}_{part}")));
    }
    header.push("mean_seconds".into());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            row.dataset.clone(),
            row.classifier.short_name().to_owned(),
            row.scenario.to_string(),
            row.folds.to_string(),
        ];
        for m in Metric::ALL {
            let s = row.get(m);
            rec.push(opt(s.map(|s| s.mean)));
            rec.push(opt(s.map(|s| s.sd)));
            rec.push(s.map(|s| s.flags.markers()).unwrap_or_default());
        }
        rec.push(row.mean_seconds.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

fn cell(s: Option<&MetricSummary>, scale: f64, decimals: usize) -> String {
    match s {
        Some(s) => format!(
            "{:.*} ± {:.*}{}",
            decimals,
            s.mean * scale,
            decimals,
            s.sd * scale,
            s.flags.markers()
        ),
        None => String::new(),
    }
}

/// Render the Markdown summary: one table per (dataset, classifier) with
/// columns Scenario | CR (%) | MSE | Logloss, plus MSE (truth) when the
/// data carries true posteriors.
pub fn render_markdown(table: &SummaryTable) -> String {
    let test = match table.test {
        TestVariant::WelchUnpaired => "Welch t-test",
        TestVariant::Paired => "paired t-test",
    };
    let mut out = String::from("# Calibration results\n\n");
    let _ = writeln!(
        out,
        "Mean ± standard deviation over cross-validation folds. Markers flag a significant \
         difference ({test}, p < {}): `*` vs Raw, `†` vs ENIR full, `#` vs the \
         classifier-specific baseline (ENIR OOB for random forests).",
        table.alpha
    );

    let mut groups: Vec<(&str, ClassifierKind)> = Vec::new();
    for r in &table.rows {
        if !groups.contains(&(r.dataset.as_str(), r.classifier)) {
            groups.push((r.dataset.as_str(), r.classifier));
        }
    }
    for (dataset, kind) in groups {
        let rows: Vec<_> = table
            .rows
            .iter()
            .filter(|r| r.dataset == dataset && r.classifier == kind)
            .collect();
        let truth = rows.iter().all(|r| r.get(Metric::MseVsTruth).is_some());
        let _ = writeln!(out, "\n## {dataset} ({})\n", kind.short_name());
        if let Some(b) = specific_baseline(kind) {
            let _ = writeln!(out, "Classifier-specific baseline: {}.\n", b.label());
        }
        out.push_str("| Scenario | CR (%) | MSE | Logloss |");
        out.push_str(if truth { " MSE (truth) |\n" } else { "\n" });
        out.push_str("|---|---|---|---|");
        out.push_str(if truth { "---|\n" } else { "\n" });
        for r in rows {
            let _ = write!(
                out,
                "| {} | {} | {} | {} |",
                r.scenario.label(),
                cell(r.get(Metric::ClassificationRate), 100.0, 2),
                cell(r.get(Metric::Mse), 1.0, 3),
                cell(r.get(Metric::Logloss), 1.0, 3),
            );
            if truth {
                let _ = write!(out, " {} |", cell(r.get(Metric::MseVsTruth), 1.0, 3));
            }
            out.push('\n');
        }
    }
    out
}

fn write_timings(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["dataset", "classifier", "scenario", "fold", "seconds"])?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.classifier.short_name().to_owned(),
            r.scenario.to_string(),
            r.fold.to_string(),
            r.seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

/// Write `results.json`, `summary.csv`, `summary.md` and `timings.csv`
/// into `out_dir`, creating it if needed. Nothing is written for an empty
/// record list. Returns the written paths.
pub fn emit_reports(table: &SummaryTable, records: &[ResultRecord], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(CalibError::EmptyRecords);
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CalibError::io(dir, e))?;
    let paths: Vec<PathBuf> = [RESULTS_JSON, SUMMARY_CSV, SUMMARY_MD, TIMINGS_CSV]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    let mut json = serde_json::to_string_pretty(records)?;
    json.push('\n');
    write_file(&paths[0], &json)?;
    write_summary_csv(table, &paths[1])?;
    write_file(&paths[2], &render_markdown(table))?;
    write_timings(records, &paths[3])?;
    Ok(paths)
}

/// Read records back from `results.json`, restoring timings from
/// `timings.csv` when it is present.
pub fn read_results(out_dir: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let dir = out_dir.as_ref();
    let path = dir.join(RESULTS_JSON);
    let text = fs::read_to_string(&path).map_err(|e| CalibError::io(&path, e))?;
    let mut records: Vec<ResultRecord> = serde_json::from_str(&text)?;
    let timings = dir.join(TIMINGS_CSV);
    if timings.exists() {
        let mut seconds: HashMap<(String, String, String, usize), f64> = HashMap::new();
        let mut reader = csv::Reader::from_path(&timings)?;
        for rec in reader.records() {
            let rec = rec?;
            let parse_err = || CalibError::InvalidArgument(format!("malformed row in {}", timings.display()));
            let fold = rec[3].parse().map_err(|_| parse_err())?;
            let secs = rec[4].parse().map_err(|_| parse_err())?;
            seconds.insert((rec[0].to_owned(), rec[1].to_owned(), rec[2].to_owned(), fold), secs);
        }
        for r in &mut records {
            let key = (
                r.dataset.clone(),
                r.classifier.short_name().to_owned(),
                r.scenario.to_string(),
                r.fold,
            );
            if let Some(&s) = seconds.get(&key) {
                r.seconds = s;
            }
        }
    }
    Ok(records)
}

/// Write the imbalance-study dataset overview.
pub fn write_imbalance_csv(infos: &[ImbalanceDataset], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["dataset", "reduced_class", "level", "n_samples", "positive_share"])?;
    for i in infos {
        w.write_record([
            i.name.clone(),
            i.reduced_class.to_string(),
            i.level.to_string(),
            i.n_samples.to_string(),
            i.positive_share.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

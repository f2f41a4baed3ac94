use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::experiment::{ResultRecord, ScenarioKind};
use crate::classifiers::ClassifierKind;
use crate::error::{CalibError, Result};
use crate::stats::{paired_t_test, welch_t_test, TestVariant, ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ClassificationRate,
    Mse,
    Logloss,
    MseVsTruth,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::ClassificationRate,
        Metric::Mse,
        Metric::Logloss,
        Metric::MseVsTruth,
    ];

    fn value(self, r: &ResultRecord) -> Option<f64> {
        let m = &r.metrics;
        match self {
            Metric::ClassificationRate => Some(m.classification_rate),
            Metric::Mse => Some(m.mse),
            Metric::Logloss => Some(m.logloss),
            Metric::MseVsTruth => m.mse_vs_truth,
        }
    }
}

/// Significance of the difference to each baseline; `None` when the
/// baseline is absent or is the scenario itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub vs_raw: Option<bool>,
    pub vs_enir_full: Option<bool>,
    pub vs_specific: Option<bool>,
}

impl Flags {
    /// Table markers: `*` vs Raw, `†` vs ENIR full, `#` vs the
    /// classifier-specific baseline.
    pub fn markers(&self) -> String {
        [(self.vs_raw, '*'), (self.vs_enir_full, '†'), (self.vs_specific, '#')]
            .iter()
            .filter(|(f, _)| *f == Some(true))
            .map(|(_, c)| *c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over folds (0 for a single fold).
    pub sd: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub scenario: ScenarioKind,
    pub folds: usize,
    pub metrics: BTreeMap<Metric, MetricSummary>,
    pub mean_seconds: f64,
}

impl SummaryRow {
    pub fn get(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.get(&metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub test: TestVariant,
    pub alpha: f64,
}

impl SummaryTable {
    pub fn row(&self, dataset: &str, classifier: ClassifierKind, scenario: ScenarioKind) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.classifier == classifier && r.scenario == scenario)
    }
}

/// The classifier-specific baseline: out-of-bag ENIR for forests.
pub fn specific_baseline(kind: ClassifierKind) -> Option<ScenarioKind> {
    match kind {
        ClassifierKind::RandomForest => Some(ScenarioKind::EnirOob),
        ClassifierKind::NaiveBayes => None,
    }
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Whether `a` and `b` differ at level `alpha`. Paired samples whose
/// differences are constant and nonzero count as different.
pub fn differs(a: &[f64], b: &[f64], test: TestVariant, alpha: f64) -> Result<bool> {
    let result = match test {
        TestVariant::WelchUnpaired => welch_t_test(a, b),
        TestVariant::Paired => paired_t_test(a, b),
    };
    match result {
        Ok(r) => Ok(r.significant(alpha)),
        Err(CalibError::DegenerateDifferences(_)) => Ok(true),
        Err(e) => Err(e),
    }
}

type GroupKey = (String, ClassifierKind);

/// Aggregate records into per-scenario means and standard deviations and
/// flag significant differences to the baselines.
///
/// Every scenario of a (dataset, classifier) group must cover the same
/// folds, `0..k`; otherwise the missing cells are reported. Significance
/// needs at least two folds.
pub fn summarize_with(records: &[ResultRecord], test: TestVariant, alpha: f64) -> Result<SummaryTable> {
    if records.is_empty() {
        return Err(CalibError::EmptyRecords);
    }
    // group -> scenario -> fold -> record
    let mut grid: BTreeMap<GroupKey, BTreeMap<ScenarioKind, BTreeMap<usize, &ResultRecord>>> =
        BTreeMap::new();
    for r in records {
        let cell = grid
            .entry((r.dataset.clone(), r.classifier))
            .or_default()
            .entry(r.scenario)
            .or_default();
        if cell.insert(r.fold, r).is_some() {
            return Err(CalibError::InvalidArgument(format!(
                "duplicate record for {}/{}/{}/fold {}",
                r.dataset,
                r.classifier.short_name(),
                r.scenario,
                r.fold
            )));
        }
    }

    let mut missing = Vec::new();
    for ((dataset, kind), scenarios) in &grid {
        let k = scenarios
            .values()
            .filter_map(|f| f.keys().next_back())
            .max()
            .map_or(0, |m| m + 1);
        for (scenario, folds) in scenarios {
            for fold in (0..k).filter(|f| !folds.contains_key(f)) {
                missing.push(format!("{dataset}/{}/{scenario}/fold {fold}", kind.short_name()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(CalibError::IncompleteGrid { missing });
    }

    let mut rows = Vec::new();
    for ((dataset, kind), scenarios) in &grid {
        let values = |s: ScenarioKind, m: Metric| -> Option<Vec<f64>> {
            scenarios
                .get(&s)
                .and_then(|folds| folds.values().map(|r| m.value(r)).collect())
        };
        let metrics_present: BTreeSet<Metric> = Metric::ALL
            .into_iter()
            .filter(|m| scenarios.values().all(|f| f.values().all(|r| m.value(r).is_some())))
            .collect();
        // Keep the order in which scenarios first appear in the records.
        let mut order: Vec<ScenarioKind> = Vec::new();
        for r in records.iter().filter(|r| &r.dataset == dataset && r.classifier == *kind) {
            if !order.contains(&r.scenario) {
                order.push(r.scenario);
            }
        }
        for scenario in order {
            let folds = &scenarios[&scenario];
            let mut metrics = BTreeMap::new();
            for &m in &metrics_present {
                let own = values(scenario, m).expect("metric present");
                let (mean, sd) = mean_sd(&own);
                let flag = |baseline: Option<ScenarioKind>| -> Result<Option<bool>> {
                    match baseline.filter(|b| *b != scenario).and_then(|b| values(b, m)) {
                        Some(base) if own.len() >= 2 => differs(&own, &base, test, alpha).map(Some),
                        _ => Ok(None),
                    }
                };
                let flags = Flags {
                    vs_raw: flag(Some(ScenarioKind::Raw))?,
                    vs_enir_full: flag(Some(ScenarioKind::EnirFull))?,
                    vs_specific: flag(specific_baseline(*kind))?,
                };
                metrics.insert(m, MetricSummary { mean, sd, flags });
            }
            let seconds: Vec<f64> = folds.values().map(|r| r.seconds).collect();
            rows.push(SummaryRow {
                dataset: dataset.clone(),
                classifier: *kind,
                scenario,
                folds: folds.len(),
                metrics,
                mean_seconds: mean_sd(&seconds).0,
            });
        }
    }
    Ok(SummaryTable { rows, test, alpha })
}

/// [`summarize_with`] using Welch's test at the 0.05 level.
pub fn summarize(records: &[ResultRecord]) -> Result<SummaryTable> {
    summarize_with(records, TestVariant::WelchUnpaired, ALPHA)
}

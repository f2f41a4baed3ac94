//! Cross-validated benchmark harness: runs scenario grids, aggregates
//! fold metrics with significance flags and writes the report files.

mod experiment;
mod report;
mod summary;

pub use experiment::{
    imbalance_datasets, prepare_fold, run_experiment, run_imbalance_study, run_on_dataset,
    DataSource, ExperimentConfig, ImbalanceDataset, ResultRecord, ScenarioKind, ThresholdSource,
};
pub use report::{
    emit_reports, read_results, render_markdown, write_imbalance_csv, RESULTS_JSON, SUMMARY_CSV,
    SUMMARY_MD, TIMINGS_CSV,
};
pub use summary::{
    differs, specific_baseline, summarize, summarize_with, Flags, Metric, MetricSummary,
    SummaryRow, SummaryTable,
};

//! Cross-validated experiments, majority-vote fusion, metrics and the
//! evaluation report.

mod experiment;
mod fusion;
mod metrics;
mod report;

pub use experiment::{
    run_task_experiment, ExperimentConfig, ExperimentResult, FeatureSource, FoldPrediction, FoldSummary,
    SkippedSubject, TaskFeatures,
};
pub use fusion::{fuse, majority_vote, TieBreak};
pub use metrics::{confusion, f1_score, metrics, metrics_from_predictions, Averaging, ConfusionBreakdown, MetricSet};
pub use report::{
    build_report, parse_report, read_report, render_report, render_summary_table, write_report, AbsentCell,
    ConfusionEntry, EvalReport, FusedResult, PredictionRow, ReportHeader, Scope, SkipRow, SummaryRow, DISCLAIMERS,
    REPORT_SCHEMA_VERSION,
};

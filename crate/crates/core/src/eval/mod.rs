//! Metrics, cross-validation, ablations, significance tests and reports.

mod cv;
mod metrics;
mod report;
mod stats;
pub mod svg;

pub use cv::{
    cross_validate, cross_validate_splits, mean_sd, run_ablation, with_jobs, AblationRow, CvResult,
    CvSummary, FoldOutcome, FoldResult, FoldRunner, MeanSd,
};
pub use metrics::{metrics_from_confusion, prf_metrics, ClassMetrics, ClassScores, Confusion};
pub use report::{
    confusion_tsv, emit_report, parse_confusion_tsv, Report, MACRO_NOTE, ZERO_DIVISION_NOTE,
};
pub use stats::{significance_test, PairedTTest};

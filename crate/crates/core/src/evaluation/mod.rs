//! Chronological splitting, CV-based tuning, metrics with bootstrap
//! intervals, permutation importance and the comparison report.

pub mod grid;
pub mod importance;
pub mod metrics;
pub mod report;
pub mod split;

pub use grid::{default_grid, full_grid, grid_search, reconstructed_rmse, write_cv_table, CandidateResult, GridResult};
pub use importance::{permutation_importance, read_importance_csv, write_importance_csv, FeatureImportance};
pub use metrics::{
    bootstrap_ci, bootstrap_metrics, compute_metrics, percentile, rmse, BootstrapOptions, Interval, Metric,
    MetricIntervals, Metrics,
};
pub use report::{
    compare_report, read_predictions_csv, runs_from_records, write_predictions_csv, EvaluationReport, ModelRun,
    PredictionRecord, ReportUnit,
};
pub use split::{chrono_split, ts_cv_folds, ChronoSplit, Fold, FoldPlan};

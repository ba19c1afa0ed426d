//! Splits, cross-validation folds, metrics, feature importance and model
//! comparison reports.

mod importance;
mod metrics;
mod report;
mod split;

pub use importance::feature_importance;
pub use metrics::{compute_metrics, Metrics};
pub use report::{comparison_report, EvalReport, ModelEntry, ReportRow};
pub use split::{kfold_indices, largest_remainder, split_three_way, SplitPlan, DEFAULT_FRACTIONS};

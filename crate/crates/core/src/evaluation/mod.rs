//! Classification metrics, leave-one-participant-out cross-validation and
//! nested tuning of the interval counts.

mod loocv;
mod metrics;
mod tune;

pub use loocv::{evaluate_fold, fold_model, loocv, participants, score, split_out, FoldResult, MetricsReport};
pub use metrics::{binary_metrics, BinaryMetrics, Confusion, F1Mode, MeanStd, MetricSummary};
pub use tune::{modal_selection, nested_tune, score_grid, select_best, CandidateScore, TuneConfig, TuneFold, TuneResult};

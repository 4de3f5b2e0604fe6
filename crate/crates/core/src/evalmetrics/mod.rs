//! Equal error rate and its per-attack / per-origin breakdowns.

mod breakdown;
mod eer;
mod report;

pub use breakdown::{breakdown, join_scores, BreakdownMode, ScoredTrial, Slice, SliceResult};
pub use eer::{compute_eer, eer_from_scores, EerResult};
pub use report::{
    parse_results_csv, render_report, results_csv, ReportRow, RESULTS_HEADER, TABLE_ATTACKS,
};

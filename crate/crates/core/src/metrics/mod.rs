//! Ranking metrics, per-slice reports and the statistics used to compare
//! runs across seeds and slices.

mod analysis;
mod ranking;
mod report;
mod stats;

pub use analysis::{correlation_analysis, CorrelationReport, CorrelationRow, SliceProperty};
pub use ranking::{
    average_precision, average_precision_of_scores, mean_average_precision, ranked_labels,
};
pub use report::{
    mean_slice_report, membership_accuracy, per_slice_map, SliceReport, SliceRow, SeedSummary,
};
pub use stats::{paired_t_test, pearson, student_t_two_sided, Correlation, PairedTTest};

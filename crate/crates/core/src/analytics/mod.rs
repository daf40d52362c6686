//! Run statistics, paired tests and report files.

pub mod output;
pub mod report;
pub mod stats;

pub use output::{
    compare_routers, comparison_csv, paired_values, reports_csv, write_outputs, ComparisonRow,
    OutputError, ReportRow, COMPARISON_HEADER, REPORTS_HEADER,
};
pub use report::{compute_report, MessageStatsReport, Metric, ReportError};
pub use stats::{
    paired_t_test, wilcoxon_signed_rank, StatError, StatTestResult, TestMethod, ALPHA,
};

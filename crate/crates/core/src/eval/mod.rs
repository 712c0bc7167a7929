//! Synthesis error statistics and listening-test statistics.

pub mod errors;
pub mod ratings;
pub mod significance;

pub use errors::{align, count_errors, AlignOp, ErrorCounts, ErrorReport, UtteranceErrors};
pub use ratings::{summarize_ratings, RatingRecord, RatingSet, ScoreSummary};
pub use significance::{significance_test, welch, TTest};

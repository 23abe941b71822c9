//! Correlation and significance statistics for evaluating analytic scores.

mod correlation;
mod special;
mod tables;

pub use correlation::{average_ranks, pearson, rmse, spearman, PairedSeries};
pub use rank_tests::{friedman, nemenyi, FriedmanResult, NemenyiResult};
pub use special::{chi2_sf, normal_cdf, studentized_range_sf};
pub use tables::{
    correlation_matrix, reconstruction_correlations, CorrelationCell, CorrelationReport, ReconstructionGrid,
    TABLE_ASPECT_ORDER,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("too few points ({0}; at least 3 needed)")]
    TooFewPoints(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

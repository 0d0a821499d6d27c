//! Screening, factor scores, regression and lag correlation against an
//! external monthly target.

mod factors;
mod lag;
mod regression;
mod screening;
mod special;
mod stats;

pub use factors::{factor_scores, group_factor_scores, FactorScores, GroupFactor};
pub use lag::{jan_adjust, lag_correlation, read_monthly_csv, LagPoint, LagProfile};
pub use regression::{adjusted_r_squared, f_statistic, ols_regress, RegressionReport};
pub use screening::{screen_indicators, RemovalReason, ScreeningReport, ScreeningRow};
pub use special::{f_cdf, f_pvalue, ln_gamma, regularized_incomplete_beta};
pub use stats::{mean, pearson, standardize};

use crate::index::IndexError;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("zero variance")]
    ZeroVariance,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("primary indicator {0:?} has no surviving entries")]
    EmptyGroup(String),
    #[error("alignment failure: {0}")]
    Alignment(String),
    #[error("invalid degrees of freedom: {0}")]
    InvalidDf(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incomplete beta did not converge for a={a}, b={b}, x={x}")]
    NoConvergence { a: f64, b: f64, x: f64 },
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Errors raised by the estimators, depth machinery and the ANCOVA procedures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("insufficient data after trimming (n = {n}, g = {g})")]
    InsufficientAfterTrim { n: usize, g: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("group too small: h = {h} observations left after trimming (need >= 2)")]
    GroupTooSmall { h: usize },
    #[error("degenerate: zero Winsorized variance in both groups")]
    ZeroWinsorizedVariance,
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("degenerate cloud: no projection direction with positive spread")]
    DegenerateCloud,
    #[error("singular robust covariance")]
    SingularCovariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("group too small for comparability: n = {n} (need >= {min})")]
    GroupTooSmallForComparability { n: usize, min: usize },
    #[error("no comparable design points")]
    NoComparablePoints,
    #[error("calibration failure: points never comparable (more than {limit} redraws for B = {b})")]
    CalibrationFailure { limit: usize, b: usize },
    #[error("calibration key mismatch: table built for {table}, requested {requested}")]
    CalibrationMismatch { table: String, requested: String },
    #[error("condition {index}: {source}")]
    InCondition { index: usize, source: Box<Error> },
    #[error("fourth moment does not exist for h = {0} (need h < 1/4)")]
    MomentUndefined(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

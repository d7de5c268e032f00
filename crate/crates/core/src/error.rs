use thiserror::Error;

/// Errors surfaced by tail arithmetic, sampling and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tail spec: {0}")]
    InvalidTailSpec(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("moment of order {order} is undefined for tail index alpha = {alpha}")]
    UndefinedMoment { order: f64, alpha: f64 },

    #[error("negative log-power k = {0} is outside the closed class; only the k = -1 product diagnostic is supported")]
    NegativeLogPower(f64),

    #[error("infeasible sampler body: {0}")]
    InfeasibleBody(String),

    #[error("non-finite summand at index {index} (value {value})")]
    NonFiniteSummand { index: u64, value: f64 },

    #[error("too few exceedances ({got}, need {need}) at threshold {threshold}")]
    TooFewExceedances { got: usize, need: usize, threshold: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

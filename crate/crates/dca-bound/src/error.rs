use thiserror::Error;

/// Errors produced by the analytic modules (schedules, moments, bounds,
/// error reports, simulation). Data-file handling has its own error type,
/// [`crate::data::DataError`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("schedule must contain at least one investment")]
    EmptySchedule,
    #[error("schedule times and amounts differ in length ({times} vs {amounts})")]
    ScheduleLengthMismatch { times: usize, amounts: usize },
    #[error("first investment time must be 0, got {0}")]
    FirstTimeNotZero(f64),
    #[error("times must be finite and strictly increasing (violation at index {0})")]
    NonMonotoneTimes(usize),
    #[error("amounts must be finite and strictly positive (violation at index {0})")]
    NonPositiveAmount(usize),
    #[error("volatility must be finite and strictly positive, got {0}")]
    NonPositiveVolatility(f64),
    #[error("log-variance must be finite and non-negative, got {0}")]
    NegativeLogVariance(f64),
    #[error("time interval must have positive length ({t_prev} .. {t_next})")]
    NonPositiveInterval { t_prev: f64, t_next: f64 },
    #[error("factor path has {factors} entries but the schedule supports at most {max} here")]
    LengthMismatch { factors: usize, max: usize },
    #[error("factors must be finite and strictly positive (violation at index {0})")]
    NonPositiveFactor(usize),
    #[error("value exceeds the representable range (log-magnitude {log_magnitude})")]
    OverflowDetected { log_magnitude: f64 },
    #[error("schedule supports {available} steps but step {requested} was requested")]
    ScheduleTooShort { requested: usize, available: usize },
    #[error("enumeration of {count} index sequences exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("operation requires non-zero drift")]
    ZeroDrift,
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("law has zero log-variance")]
    DegenerateLaw,
    #[error("internal inconsistency: {context} produced {value}, below the -1e-9 floor")]
    InternalInconsistency { context: &'static str, value: f64 },
    #[error("every (J, y) grid point overflowed or lost precision")]
    NoFeasibleGridPoint,
    #[error("drift must be strictly positive, got {0}")]
    NonPositiveDrift(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

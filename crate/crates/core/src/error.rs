use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite observation at coordinate {index}")]
    NonFinite { index: usize },

    /// A lag was requested that the store no longer (or never) held.
    #[error("no summary stored for lag {g} at time {t}")]
    Lookup { t: usize, g: usize },

    #[error("detector already alarmed at t={at}; reset before stepping again")]
    StepAfterAlarm { at: usize },

    /// The estimated pre-change noise level is zero, so the normalised
    /// statistic is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numeric error: {message} (best estimate {estimate})")]
    Numeric { message: String, estimate: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

use thiserror::Error;

/// Errors raised by configuration checks and the sample buffers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("timestamp {got} does not exceed last stored timestamp {last}")]
    NonMonotonicTimestamp { last: f64, got: f64 },

    #[error("timestamp spacing {got} differs from window period {expected}")]
    NonUniformSpacing { expected: f64, got: f64 },

    #[error("estimator warming up: {have} of {need} samples")]
    WarmingUp { have: usize, need: usize },

    #[error("input and output windows are not aligned")]
    MisalignedWindows,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

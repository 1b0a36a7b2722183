use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("signal of length {len} is too short (need at least {min})")]
    SignalTooShort { len: usize, min: usize },
    #[error("signal contains a non-finite value at index {0}")]
    NonFiniteInput(usize),
    #[error("period {period} needs at least {} samples, got {len}", 2 * period)]
    PeriodTooLong { period: usize, len: usize },
    #[error("invalid decomposition config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

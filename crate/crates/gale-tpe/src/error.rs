use thiserror::Error;

#[derive(Debug, Error)]
pub enum TpeError {
    #[error("search space is invalid: {0}")]
    InvalidSpace(String),
    #[error("cannot split an empty observation list")]
    EmptyObservations,
    #[error("sample {value} for `{name}` lies outside [{lo}, {hi}]")]
    OutOfBoundsSample {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("config is missing parameter `{0}`")]
    MissingParameter(String),
    #[error("config sets `{0}`, which the space does not define")]
    UnknownParameter(String),
    #[error("value for `{name}` does not match its {expected} kind")]
    WrongKind { name: String, expected: String },
    #[error("choice `{value}` for `{name}` is not in the categorical domain")]
    UnknownChoice { name: String, value: String },
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("invalid tuner config: {0}")]
    InvalidConfig(String),
    #[error("every initial trial failed; nothing to optimize")]
    AllTrialsFailed,
    #[error("trial failed: {0}")]
    Trial(String),
    #[error(transparent)]
    Tpe(#[from] gale_tpe::TpeError),
    #[error(transparent)]
    Decomposition(#[from] gale_decomp::DecompError),
    #[error(transparent)]
    Forecaster(#[from] gale_tft::TftError),
    #[error(transparent)]
    Evaluation(#[from] gale_eval::EvalError),
    #[error(transparent)]
    Data(#[from] gale_data::DataError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

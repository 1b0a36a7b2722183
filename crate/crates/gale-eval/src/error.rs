use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cannot evaluate an empty series")]
    EmptySeries,
    #[error("maximum actual value is not positive, so normalized metrics are undefined")]
    ZeroMaxActual,
    #[error("forecast history is empty")]
    EmptyHistory,
    #[error("no usable {0} windows")]
    EmptyDataset(&'static str),
    #[error("loss became non-finite at epoch {epoch}: {loss}")]
    DivergedLoss { epoch: usize, loss: f64 },
    #[error("invalid baseline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Forecaster(#[from] gale_tft::TftError),
    #[error(transparent)]
    Data(#[from] gale_data::DataError),
    #[error(transparent)]
    Autodiff(#[from] gale_autodiff::AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

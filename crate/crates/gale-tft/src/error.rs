use thiserror::Error;

#[derive(Debug, Error)]
pub enum TftError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("variable selection needs at least one feature")]
    EmptyFeatureList,

    #[error("{0} windows are empty; series too short for encoder + horizon")]
    EmptyDataset(&'static str),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    DivergedLoss { epoch: usize, loss: f64 },

    #[error("{models} models cannot forecast {modes} modes")]
    ModelCountMismatch { models: usize, modes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Autodiff(#[from] gale_autodiff::AutodiffError),

    #[error(transparent)]
    Data(#[from] gale_data::DataError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed artifact: {0}")]
    Format(String),
}

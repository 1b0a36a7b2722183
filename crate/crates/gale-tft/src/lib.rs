//! A toy-scale temporal fusion transformer for multi-horizon quantile
//! forecasting, built on the workspace's reverse-mode autodiff engine.
//!
//! The model embeds static, observed-past, and future-known variables,
//! selects among them with softmax-weighted gated residual networks,
//! processes the sequence with an LSTM encoder-decoder, attends over the
//! whole window with interpretable multi-head attention, and emits one
//! linear head per target quantile. Training uses Adam on pinball loss
//! with early stopping; per-mode models forecast decomposed subseries
//! that are summed back into the original units.

pub mod batch;
pub mod blocks;
pub mod config;
mod error;
pub mod forecast;
pub mod importance;
pub mod layout;
pub mod loss;
pub mod model;
pub mod train;

pub use batch::{assemble_batch, window_origins, Batch};
pub use config::TftConfig;
pub use error::TftError;
pub use forecast::{
    aggregate_mode_forecasts, median_quantile_index, predict_modes, write_forecast_csv,
};
pub use importance::{feature_importance, FeatureImportance, VariableImportance};
pub use layout::{EmbedKind, FeatureColumn, FeatureLayout};
pub use loss::quantile_loss;
pub use model::{ForwardOutputs, TftModel};
pub use train::{evaluate, train, EpochStats, TrainingHistory};

pub type Result<T> = std::result::Result<T, TftError>;

use crate::{Result, TftError};
use serde::{Deserialize, Serialize};

/// Architecture and training settings of one forecaster instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TftConfig {
    /// Width `d` of every internal representation.
    pub hidden_size: usize,
    /// Attention head count; must divide `hidden_size`.
    pub num_heads: usize,
    /// Number of past steps fed to the encoder.
    pub encoder_length: usize,
    /// Number of future steps forecast jointly.
    pub horizon: usize,
    /// Strictly ascending quantile levels in (0, 1).
    pub quantiles: Vec<f64>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TftConfig {
    fn default() -> Self {
        Self {
            hidden_size: 16,
            num_heads: 4,
            encoder_length: 24,
            horizon: 12,
            quantiles: vec![0.1, 0.5, 0.9],
            dropout: 0.1,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            seed: 0,
        }
    }
}

impl TftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.num_heads == 0 {
            return Err(TftError::InvalidConfig(
                "hidden size and head count must be positive".into(),
            ));
        }
        if self.hidden_size % self.num_heads != 0 {
            return Err(TftError::InvalidConfig(format!(
                "hidden size {} not divisible by {} heads",
                self.hidden_size, self.num_heads
            )));
        }
        if self.encoder_length == 0 || self.horizon == 0 {
            return Err(TftError::InvalidConfig(
                "encoder length and horizon must be at least 1".into(),
            ));
        }
        if self.quantiles.is_empty() {
            return Err(TftError::InvalidConfig("quantile list is empty".into()));
        }
        let ascending = self.quantiles.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.quantiles.iter().all(|q| (0.0..1.0).contains(q) && *q > 0.0);
        if !ascending || !in_range {
            return Err(TftError::InvalidConfig(format!(
                "quantiles must be strictly ascending within (0, 1), got {:?}",
                self.quantiles
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TftError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(TftError::InvalidConfig(
                "learning rate, batch size, and max epochs must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Attention key/query/value width per head.
    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_heads
    }

    /// Total attended sequence length (past plus future).
    pub fn window_length(&self) -> usize {
        self.encoder_length + self.horizon
    }
}

use crate::{Result, TftError};
use gale_data::{calendar_cardinality, FeatureRole, NormalizationParams, SeriesFrame};
use serde::{Deserialize, Serialize};

/// How one column turns into a `d`-dimensional vector per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedKind {
    /// Continuous value through a learned linear map.
    Linear,
    /// Integer code through a learned lookup table. `scale` holds the
    /// min-max range the column was normalized with, so stored values can be
    /// decoded back to table indices.
    Table {
        cardinality: usize,
        scale: Option<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub embedding: EmbedKind,
}

impl EmbedKind {
    /// Recover the embedding-table index encoded in a stored value.
    pub fn decode_index(&self, value: f64) -> Option<usize> {
        match self {
            EmbedKind::Linear => None,
            EmbedKind::Table { cardinality, scale } => {
                let raw = match scale {
                    Some((lo, hi)) => value * (hi - lo) + lo,
                    None => value,
                };
                Some((raw.round().max(0.0) as usize).min(cardinality - 1))
            }
        }
    }
}

impl FeatureColumn {
    /// Recover the embedding-table index encoded in a stored value.
    pub fn decode_index(&self, value: f64) -> Option<usize> {
        self.embedding.decode_index(value)
    }
}

/// The model-facing view of a frame: which columns feed which input block.
///
/// Past inputs are the observed covariates, the known inputs, and the target
/// history; future inputs are the known columns only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub static_columns: Vec<FeatureColumn>,
    pub observed_columns: Vec<FeatureColumn>,
    pub known_columns: Vec<FeatureColumn>,
    pub target_column: String,
}

impl FeatureLayout {
    /// Derive the layout from a frame's schema. Calendar-named columns embed
    /// through lookup tables; `normalization` supplies the ranges needed to
    /// decode their normalized values back into indices.
    pub fn from_frame(
        frame: &SeriesFrame,
        normalization: Option<&NormalizationParams>,
    ) -> Result<Self> {
        let column = |name: &str| -> FeatureColumn {
            let embedding = match calendar_cardinality(name) {
                Some(cardinality) => EmbedKind::Table {
                    cardinality,
                    scale: normalization.and_then(|p| p.get(name).ok()),
                },
                None => EmbedKind::Linear,
            };
            FeatureColumn {
                name: name.to_string(),
                embedding,
            }
        };
        let names = |role| {
            frame
                .names_with_role(role)
                .into_iter()
                .map(column)
                .collect::<Vec<_>>()
        };
        let layout = Self {
            static_columns: names(FeatureRole::Static),
            observed_columns: names(FeatureRole::ObservedPast),
            known_columns: names(FeatureRole::KnownFuture),
            target_column: frame.target_name().to_string(),
        };
        if layout.known_columns.is_empty() {
            return Err(TftError::InvalidConfig(
                "the decoder needs at least one future-known column".into(),
            ));
        }
        Ok(layout)
    }

    /// Variables feeding the past branch, in input order.
    pub fn past_variables(&self) -> Vec<&FeatureColumn> {
        self.observed_columns
            .iter()
            .chain(&self.known_columns)
            .collect()
    }

    pub fn n_past_variables(&self) -> usize {
        // Observed + known + the target's own history.
        self.observed_columns.len() + self.known_columns.len() + 1
    }
}

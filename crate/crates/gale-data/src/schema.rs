use crate::{DataError, Result};
use serde::{Deserialize, Serialize};

/// How a column enters the forecasting model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRole {
    /// Time-invariant metadata (for example a turbine identifier).
    Static,
    /// Measured covariates available only up to the forecast origin.
    ObservedPast,
    /// Inputs known for future timestamps too (calendar features).
    KnownFuture,
    /// The series being forecast.
    Target,
}

/// How sub-interval readings combine when the series is resampled coarser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Min,
    Max,
    /// Root mean square, for columns that are themselves standard deviations.
    StdPool,
}

/// Declares one column: its model role, resampling rule, and (optionally)
/// the physical range used for outlier clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub role: FeatureRole,
    pub aggregation: Aggregation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical_bounds: Option<(f64, f64)>,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, role: FeatureRole, aggregation: Aggregation) -> Self {
        Self {
            name: name.into(),
            role,
            aggregation,
            physical_bounds: None,
        }
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.physical_bounds = Some((lo, hi));
        self
    }
}

/// Check the schema invariants: unique names and exactly one target column.
pub fn validate_schema(schema: &[FeatureSpec]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for f in schema {
        if !seen.insert(&f.name) {
            return Err(DataError::InvalidSchema(format!(
                "duplicate column name `{}`",
                f.name
            )));
        }
        if let Some((lo, hi)) = f.physical_bounds {
            if !(lo < hi) {
                return Err(DataError::InvalidSchema(format!(
                    "`{}`: bounds ({lo}, {hi}) are not ordered",
                    f.name
                )));
            }
        }
    }
    let targets = schema
        .iter()
        .filter(|f| f.role == FeatureRole::Target)
        .count();
    if targets != 1 {
        return Err(DataError::InvalidSchema(format!(
            "expected exactly one target column, found {targets}"
        )));
    }
    Ok(())
}

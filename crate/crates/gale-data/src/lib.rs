//! Data pipeline for hourly wind-power series: CSV ingestion, physical-bound
//! clipping, similar-day gap imputation, resampling, calendar features,
//! min-max normalization, and chronological train/val/test splits.
//!
//! Frames carry missing values as NaN; every operation is a pure function
//! from frame to frame, so pipelines are re-runnable and order-explicit.

mod calendar;
mod clean;
mod error;
mod frame;
mod ingest;
mod normalize;
mod resample;
mod schema;
mod split;

pub use calendar::{
    add_calendar_features, calendar_cardinality, season_of_month, CALENDAR_COLUMNS, MONTH_LABELS,
    SEASON_LABELS,
};
pub use clean::{clip_outliers, impute_missing};
pub use error::DataError;
pub use frame::{is_missing, SeriesFrame};
pub use ingest::ingest_csv;
pub use normalize::{denormalize, normalize_minmax, NormalizationParams};
pub use resample::resample;
pub use schema::{validate_schema, Aggregation, FeatureRole, FeatureSpec};
pub use split::{split_by_fraction, split_by_year, DatasetSplit, SplitBoundaries};

pub type Result<T> = std::result::Result<T, DataError>;

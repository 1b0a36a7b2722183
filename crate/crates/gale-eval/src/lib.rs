//! Evaluation toolkit for the forecasting pipeline: normalized error
//! metrics, calendar-grouped reporting, reference baselines, and export of
//! plot-ready report files.

mod baselines;
mod error;
mod grouping;
mod metrics;
mod report;

pub use baselines::{
    evaluation_origins, lstm_baseline, mlp_baseline, persistence_baseline, BaselineConfig,
    BaselineForecast, LstmBaseline, MlpBaseline,
};
pub use error::EvalError;
pub use grouping::{group_by_period, Granularity, GroupEntry, GroupedReport};
pub use metrics::{metric_report, nmae, nrmse, MetricReport};
pub use report::{export_report, read_metrics, ModelMetrics, ModelReport};

pub type Result<T> = std::result::Result<T, EvalError>;

//! Joint hyperparameter search over signal decomposition and forecaster
//! settings.
//!
//! The search alternates between the two coordinate groups: propose new
//! decomposition settings with the model frozen at the incumbent best, then
//! new model settings with the decomposition frozen, accepting a proposal
//! only when its loss beats the incumbent by more than a margin. Proposals
//! come from a tree-structured Parzen estimator conditioned on history
//! entries that share the frozen coordinate. Trials score the full pipeline:
//! decompose the target, train one forecaster per mode, forecast the
//! evaluation split, aggregate, and measure nMAE.
//!
//! Every evaluation, including failures, lands in an audit log inside a
//! serializable [`Study`], so a run can be resumed or replayed exactly.

mod error;
mod evaluator;
mod pipeline;
mod space;
mod tuner;

pub use error::TunerError;
pub use evaluator::{PipelineEvaluator, TrialEvaluator};
pub use pipeline::{
    decompose_split, forecast_split, train_mode_models, DecomposedSplit, EvaluationSplit,
    ForecastPart, SplitForecast,
};
pub use space::{apply_model_sample, model_space};
pub use tuner::{RunReport, Study, Trial, TrialPhase, TunerConfig, TunerObservation, TunerState};

pub type Result<T> = std::result::Result<T, TunerError>;

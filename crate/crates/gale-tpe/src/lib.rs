//! Tree-structured Parzen estimator for hyperparameter search.
//!
//! Past trials are split into a good set (the lowest-loss quantile) and a bad
//! set; each parameter gets a Parzen density fitted per side, and the next
//! suggestion is the candidate drawn from the good density that maximizes the
//! good/bad density ratio. Continuous, log-scaled, integer, and categorical
//! parameters are supported; parameters are modeled independently.

mod error;
mod optimizer;
mod parzen;
mod space;

pub use error::TpeError;
pub use optimizer::{split_observations, suggest, Observation, TpeConfig};
pub use parzen::{parzen_density, ContinuousParzen, ParzenDensity};
pub use space::{sample_random, Config, ParamKind, ParamSpec, ParamValue, SearchSpace};

pub type Result<T> = std::result::Result<T, TpeError>;

use crate::pipeline::{decompose_split, forecast_split, train_mode_models, EvaluationSplit};
use crate::space::apply_model_sample;
use crate::Result;
use gale_data::DatasetSplit;
use gale_decomp::{apply_sample, DecompositionConfig};
use gale_eval::nmae;
use gale_tft::TftConfig;
use gale_tpe::Config;

/// Scores one (decomposition, model) hyperparameter pair with a loss to
/// minimize. Errors mark a failed trial; the tuner records them with an
/// infinite loss rather than aborting the search.
pub trait TrialEvaluator {
    fn evaluate(&mut self, decomposition: &Config, model: &Config) -> Result<f64>;
}

/// The full forecasting pipeline as a trial evaluator: decompose the target
/// with the sampled decomposition settings, train one forecaster per mode
/// with the sampled model settings, forecast the evaluation split at
/// non-overlapping origins, aggregate, and return nMAE.
///
/// Samples are overlaid onto the base configs, so anything outside the search
/// spaces (periods, window geometry, quantiles, training budget, seeds) is
/// pinned for the whole study. Repeated calls with the same pair return the
/// same loss: all randomness is seeded from the base configs.
pub struct PipelineEvaluator {
    split: DatasetSplit,
    base_decomposition: DecompositionConfig,
    base_model: TftConfig,
    evaluation_split: EvaluationSplit,
}

impl PipelineEvaluator {
    pub fn new(
        split: DatasetSplit,
        base_decomposition: DecompositionConfig,
        base_model: TftConfig,
        evaluation_split: EvaluationSplit,
    ) -> Self {
        Self {
            split,
            base_decomposition,
            base_model,
            evaluation_split,
        }
    }

    pub fn split(&self) -> &DatasetSplit {
        &self.split
    }
}

impl TrialEvaluator for PipelineEvaluator {
    fn evaluate(&mut self, decomposition: &Config, model: &Config) -> Result<f64> {
        let dec_cfg = apply_sample(&self.base_decomposition, decomposition)?;
        // A zero-epoch base scores the pipeline at initialization; the config
        // contract requires a positive budget, so the overlay validates with
        // one epoch and the skip happens in training.
        let zero_budget = self.base_model.max_epochs == 0;
        let mut base_model = self.base_model.clone();
        if zero_budget {
            base_model.max_epochs = 1;
        }
        let mut model_cfg = apply_model_sample(&base_model, model)?;
        if zero_budget {
            model_cfg.max_epochs = 0;
        }
        let decomposed = decompose_split(&self.split, &dec_cfg)?;
        let models = train_mode_models(&decomposed, &model_cfg)?;
        let forecast = forecast_split(
            &models,
            &decomposed,
            &self.split,
            self.evaluation_split.part(),
            model_cfg.horizon,
        )?;
        Ok(nmae(&forecast.actual, &forecast.predicted)?)
    }
}

use crate::evaluator::TrialEvaluator;
use crate::pipeline::EvaluationSplit;
use crate::{Result, TunerError};
use gale_tpe::{sample_random, suggest, Config, Observation, SearchSpace, TpeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::{Duration, Instant};

/// Failed trials carry an infinite loss sentinel. JSON has no infinity, so
/// non-finite values round-trip as null.
mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Settings for the alternating search: random warm start size, step budget,
/// the acceptance margin, and the two search spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunerConfig {
    /// Random (decomposition, model) pairs evaluated before alternating.
    pub n_init: usize,
    /// Alternating steps after the warm start; each step proposes once per
    /// coordinate.
    pub n_max: usize,
    /// Minimum loss decrease for a proposal to enter the history. May be
    /// infinite, which freezes the history at its warm-start contents.
    #[serde(with = "infinite_as_null")]
    pub theta: f64,
    pub decomposition_space: SearchSpace,
    pub model_space: SearchSpace,
    pub seed: u64,
    pub evaluation_split: EvaluationSplit,
    /// Consecutive steps without an accepted proposal before stopping early.
    pub stall_limit: usize,
    pub tpe: TpeConfig,
}

impl TunerConfig {
    pub fn new(decomposition_space: SearchSpace, model_space: SearchSpace) -> Self {
        Self {
            n_init: 5,
            n_max: 20,
            theta: 0.0,
            decomposition_space,
            model_space,
            seed: 0,
            evaluation_split: EvaluationSplit::Validation,
            stall_limit: 5,
            tpe: TpeConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 {
            return Err(TunerError::InvalidConfig(
                "at least one warm-start trial is required".into(),
            ));
        }
        if self.theta.is_nan() || self.theta < 0.0 {
            return Err(TunerError::InvalidConfig(format!(
                "acceptance margin must be non-negative, got {}",
                self.theta
            )));
        }
        if self.stall_limit == 0 {
            return Err(TunerError::InvalidConfig(
                "stall limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted point of the search history: a hyperparameter pair and its
/// evaluated loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerObservation {
    pub decomposition: Config,
    pub model: Config,
    #[serde(with = "infinite_as_null")]
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialPhase {
    Init,
    DecompositionProposal,
    ModelProposal,
}

/// One evaluation in the audit log, accepted or not. `reference_loss` is the
/// incumbent best when the proposal was made; warm-start trials have none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// Alternating step this trial belongs to; zero for the warm start.
    pub step: usize,
    pub phase: TrialPhase,
    pub decomposition: Config,
    pub model: Config,
    #[serde(with = "infinite_as_null")]
    pub loss: f64,
    pub reference_loss: Option<f64>,
    pub accepted: bool,
    pub error: Option<String>,
}

/// Everything the search has done so far, including the generator state, so
/// a saved study resumes exactly where it stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunerState {
    pub observations: Vec<TunerObservation>,
    pub trials: Vec<Trial>,
    pub steps_completed: usize,
    pub stalled_steps: usize,
    pub rng: ChaCha8Rng,
}

impl TunerState {
    /// The first observation attaining the minimum finite loss; `None` until
    /// some trial succeeds.
    pub fn best(&self) -> Option<&TunerObservation> {
        self.observations
            .iter()
            .filter(|o| o.loss.is_finite())
            .fold(None, |best: Option<&TunerObservation>, o| match best {
                Some(b) if b.loss <= o.loss => Some(b),
                _ => Some(o),
            })
    }
}

/// Outcome summary of a [`Study::run`] call. Wall-clock lives here and not in
/// the study file, which keeps reruns of the same seed byte-identical.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub best: TunerObservation,
    pub evaluations: usize,
    pub steps: usize,
    pub stopped_early: bool,
    pub wall_clock: Duration,
}

/// A tuning run: configuration plus mutable state, serializable as one JSON
/// document for auditing and resumption.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Study {
    pub config: TunerConfig,
    pub state: TunerState,
}

impl Study {
    pub fn new(config: TunerConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            state: TunerState {
                observations: Vec::new(),
                trials: Vec::new(),
                steps_completed: 0,
                stalled_steps: 0,
                rng,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut doc = serde_json::to_string_pretty(self)?;
        doc.push('\n');
        std::fs::write(path, doc)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let study: Study = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        study.config.validate()?;
        Ok(study)
    }

    pub fn is_initialized(&self) -> bool {
        !self.state.trials.is_empty()
    }

    /// Evaluate `n_init` random pairs and record all of them, failures
    /// included, as the warm-start history.
    pub fn initialize(&mut self, evaluator: &mut dyn TrialEvaluator) -> Result<()> {
        if self.is_initialized() {
            return Err(TunerError::InvalidConfig(
                "study is already initialized".into(),
            ));
        }
        for _ in 0..self.config.n_init {
            let u = sample_random(&self.config.decomposition_space, &mut self.state.rng);
            let v = sample_random(&self.config.model_space, &mut self.state.rng);
            let (loss, error) = score(evaluator, &u, &v);
            self.state.trials.push(Trial {
                index: self.state.trials.len(),
                step: 0,
                phase: TrialPhase::Init,
                decomposition: u.clone(),
                model: v.clone(),
                loss,
                reference_loss: None,
                accepted: true,
                error,
            });
            self.state.observations.push(TunerObservation {
                decomposition: u,
                model: v,
                loss,
            });
        }
        if self.state.best().is_none() {
            return Err(TunerError::AllTrialsFailed);
        }
        Ok(())
    }

    /// One alternating step: propose new decomposition settings with the
    /// model frozen at the incumbent best, then the reverse. A proposal joins
    /// the history only when it beats the incumbent loss by more than the
    /// acceptance margin. Returns whether either proposal was accepted.
    pub fn step(&mut self, evaluator: &mut dyn TrialEvaluator) -> Result<bool> {
        if !self.is_initialized() {
            return Err(TunerError::InvalidConfig(
                "step called before initialization".into(),
            ));
        }
        let step_no = self.state.steps_completed + 1;
        let mut any_accepted = false;
        for phase in [TrialPhase::DecompositionProposal, TrialPhase::ModelProposal] {
            let incumbent = self
                .state
                .best()
                .cloned()
                .ok_or(TunerError::AllTrialsFailed)?;
            let space = match phase {
                TrialPhase::DecompositionProposal => &self.config.decomposition_space,
                _ => &self.config.model_space,
            };
            // Condition the estimator on trials sharing the frozen
            // coordinate; with fewer than two such entries fall back to the
            // marginal over the whole history.
            let mut history = project(&self.state.observations, phase, Some(&incumbent));
            if history.len() < 2 {
                history = project(&self.state.observations, phase, None);
            }
            let candidate = suggest(space, &history, &self.config.tpe, &mut self.state.rng)?;
            let (u, v) = match phase {
                TrialPhase::DecompositionProposal => (candidate, incumbent.model.clone()),
                _ => (incumbent.decomposition.clone(), candidate),
            };
            let (loss, error) = score(evaluator, &u, &v);
            let accepted = incumbent.loss - loss > self.config.theta;
            self.state.trials.push(Trial {
                index: self.state.trials.len(),
                step: step_no,
                phase,
                decomposition: u.clone(),
                model: v.clone(),
                loss,
                reference_loss: Some(incumbent.loss),
                accepted,
                error,
            });
            if accepted {
                self.state.observations.push(TunerObservation {
                    decomposition: u,
                    model: v,
                    loss,
                });
                any_accepted = true;
            }
        }
        self.state.steps_completed = step_no;
        self.state.stalled_steps = if any_accepted {
            0
        } else {
            self.state.stalled_steps + 1
        };
        Ok(any_accepted)
    }

    /// Warm-start if needed, then step until the budget is spent or the
    /// search stalls. Resuming a loaded study continues the same trajectory.
    pub fn run(&mut self, evaluator: &mut dyn TrialEvaluator) -> Result<RunReport> {
        let started = Instant::now();
        if !self.is_initialized() {
            self.initialize(evaluator)?;
        } else if self.state.best().is_none() {
            return Err(TunerError::AllTrialsFailed);
        }
        while self.state.steps_completed < self.config.n_max
            && self.state.stalled_steps < self.config.stall_limit
        {
            self.step(evaluator)?;
        }
        let best = self
            .state
            .best()
            .cloned()
            .ok_or(TunerError::AllTrialsFailed)?;
        Ok(RunReport {
            best,
            evaluations: self.state.trials.len(),
            steps: self.state.steps_completed,
            stopped_early: self.state.steps_completed < self.config.n_max,
            wall_clock: started.elapsed(),
        })
    }
}

/// Project the history onto one coordinate for the density fit. With a
/// `frozen` incumbent only entries matching its other coordinate are kept;
/// without one the whole history is marginalized.
fn project(
    observations: &[TunerObservation],
    phase: TrialPhase,
    frozen: Option<&TunerObservation>,
) -> Vec<Observation> {
    observations
        .iter()
        .filter(|o| match (phase, frozen) {
            (_, None) => true,
            (TrialPhase::DecompositionProposal, Some(f)) => o.model == f.model,
            (_, Some(f)) => o.decomposition == f.decomposition,
        })
        .map(|o| Observation {
            config: match phase {
                TrialPhase::DecompositionProposal => o.decomposition.clone(),
                _ => o.model.clone(),
            },
            loss: o.loss,
        })
        .collect()
}

fn score(
    evaluator: &mut dyn TrialEvaluator,
    u: &Config,
    v: &Config,
) -> (f64, Option<String>) {
    match evaluator.evaluate(u, v) {
        Ok(loss) if loss.is_finite() => (loss, None),
        Ok(loss) => (f64::INFINITY, Some(format!("non-finite loss {loss}"))),
        Err(e) => (f64::INFINITY, Some(e.to_string())),
    }
}

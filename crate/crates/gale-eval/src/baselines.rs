//! Reference forecasters evaluated alongside the main model: persistence,
//! a feed-forward network on flattened windows, and a single-layer LSTM.
//! Both trained baselines reuse the forecaster's window extraction and early
//! stopping so comparisons differ only in architecture.

use crate::{EvalError, Result};
use chrono::{DateTime, Utc};
use gale_autodiff::{
    adam_step, lstm_cell, AdamConfig, NodeId, ParamStore, Tape, Tensor, LstmParamIds,
};
use gale_data::{DatasetSplit, SeriesFrame};
use gale_tft::{assemble_batch, window_origins, Batch, FeatureLayout};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Last observed value held flat for `horizon` steps.
pub fn persistence_baseline(history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let last = history.last().copied().ok_or(EvalError::EmptyHistory)?;
    Ok(vec![last; horizon])
}

/// Architecture and training settings shared by the trained baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub hidden_size: usize,
    /// Number of past steps in each input window.
    pub encoder_length: usize,
    /// Number of future steps predicted per window.
    pub horizon: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            hidden_size: 16,
            encoder_length: 24,
            horizon: 12,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_size == 0
            || self.encoder_length == 0
            || self.horizon == 0
            || self.batch_size == 0
            || self.max_epochs == 0
        {
            return Err(EvalError::InvalidConfig(
                "sizes, batch size, and epoch count must be positive".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(EvalError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Forecasts over a span, aligned point-for-point with the actual values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineForecast {
    pub timestamps: Vec<DateTime<Utc>>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Origins of evaluation windows spaced `stride` steps apart, so with
/// `stride = horizon` each test point is forecast at most once. Origins
/// whose windows cross data gaps are skipped, restarting the spacing.
pub fn evaluation_origins(
    frame: &SeriesFrame,
    layout: &FeatureLayout,
    encoder_length: usize,
    horizon: usize,
    stride: usize,
) -> Result<Vec<usize>> {
    if stride == 0 {
        return Err(EvalError::InvalidConfig("stride must be positive".into()));
    }
    let valid = window_origins(frame, layout, encoder_length, horizon, true)?;
    let mut picked: Vec<usize> = Vec::new();
    for t in valid {
        if picked.last().map_or(true, |&prev| t >= prev + stride) {
            picked.push(t);
        }
    }
    Ok(picked)
}

/// Feed-forward baseline: the flattened past window (observed covariates and
/// target history) through one ELU hidden layer to all horizon steps.
pub struct MlpBaseline {
    config: BaselineConfig,
    layout: FeatureLayout,
    store: ParamStore,
}

/// Recurrent baseline: a single LSTM pass over the past window, with a
/// linear head on the final hidden state.
pub struct LstmBaseline {
    config: BaselineConfig,
    layout: FeatureLayout,
    store: ParamStore,
}

/// Width of one past step: every observed covariate plus the target.
fn step_width(layout: &FeatureLayout) -> usize {
    layout.observed_columns.len() + 1
}

/// Past window as one tape node of shape `[B, k, step_width]`.
fn past_window(tape: &mut Tape, batch: &Batch) -> Result<NodeId> {
    let observed = tape.leaf(batch.observed_past.clone());
    let target = tape.leaf(batch.target_past.clone());
    if batch.observed_past.shape()[2] == 0 {
        Ok(target)
    } else {
        Ok(tape.concat(&[observed, target], 2)?)
    }
}

fn mlp_forward(
    tape: &mut Tape,
    store: &ParamStore,
    batch: &Batch,
    config: &BaselineConfig,
    layout: &FeatureLayout,
) -> Result<NodeId> {
    let rows = batch.len();
    let k = config.encoder_length;
    let width = step_width(layout);
    let window = past_window(tape, batch)?;
    let flat = tape.reshape(window, vec![rows, k * width])?;

    let param = |name: &str| store.find(name).expect("registered baseline parameter");
    let w1 = tape.param(store, param("mlp.hidden.weight"));
    let b1 = tape.param(store, param("mlp.hidden.bias"));
    let w2 = tape.param(store, param("mlp.out.weight"));
    let b2 = tape.param(store, param("mlp.out.bias"));

    let hidden = tape.matmul(flat, w1)?;
    let hidden = tape.add(hidden, b1)?;
    let hidden = tape.elu(hidden);
    let out = tape.matmul(hidden, w2)?;
    Ok(tape.add(out, b2)?)
}

fn lstm_forward(
    tape: &mut Tape,
    store: &ParamStore,
    batch: &Batch,
    config: &BaselineConfig,
    layout: &FeatureLayout,
) -> Result<NodeId> {
    let rows = batch.len();
    let k = config.encoder_length;
    let width = step_width(layout);
    let window = past_window(tape, batch)?;

    let ids = LstmParamIds {
        w_input: store.find("lstm.w_input").expect("registered"),
        w_hidden: store.find("lstm.w_hidden").expect("registered"),
        bias: store.find("lstm.bias").expect("registered"),
    };
    let weights = ids.on_tape(tape, store);
    let zeros = Tensor::zeros(&[rows, config.hidden_size]);
    let mut h = tape.leaf(zeros.clone());
    let mut c = tape.leaf(zeros);
    for t in 0..k {
        let step = tape.slice(window, 1, t, 1)?;
        let x = tape.reshape(step, vec![rows, width])?;
        let (h_next, c_next) = lstm_cell(tape, &weights, x, h, c)?;
        h = h_next;
        c = c_next;
    }

    let param = |name: &str| store.find(name).expect("registered baseline parameter");
    let w = tape.param(store, param("lstm.head.weight"));
    let b = tape.param(store, param("lstm.head.bias"));
    let out = tape.matmul(h, w)?;
    Ok(tape.add(out, b)?)
}

/// Mean squared error between `predicted` (`[B, horizon]`) and the batch's
/// future target values.
fn mse_loss(tape: &mut Tape, predicted: NodeId, batch: &Batch) -> Result<NodeId> {
    let rows = batch.len();
    let horizon = batch.target_future.shape()[1];
    let target = tape.leaf(batch.target_future.clone());
    let target = tape.reshape(target, vec![rows, horizon])?;
    let diff = tape.sub(predicted, target)?;
    let squared = tape.mul(diff, diff)?;
    Ok(tape.mean(squared, None)?)
}

type ForwardFn =
    fn(&mut Tape, &ParamStore, &Batch, &BaselineConfig, &FeatureLayout) -> Result<NodeId>;

/// Shared mini-batch trainer: Adam on squared error with per-epoch
/// validation, patience-based early stopping, and best-weight restoration.
fn fit(
    split: &DatasetSplit,
    config: &BaselineConfig,
    layout: &FeatureLayout,
    store: &mut ParamStore,
    forward: ForwardFn,
) -> Result<()> {
    let k = config.encoder_length;
    let horizon = config.horizon;
    let mut train_origins = window_origins(&split.train, layout, k, horizon, true)?;
    if train_origins.is_empty() {
        return Err(EvalError::EmptyDataset("training"));
    }
    let val_origins = window_origins(&split.val, layout, k, horizon, true)?;
    if val_origins.is_empty() {
        return Err(EvalError::EmptyDataset("validation"));
    }
    let val_batch = assemble_batch(&split.val, layout, k, horizon, &val_origins)?;

    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best_val = f64::INFINITY;
    let mut best_weights = store.snapshot();
    let mut epochs_since_best = 0;

    for epoch in 0..config.max_epochs {
        train_origins.shuffle(&mut rng);
        for chunk in train_origins.chunks(config.batch_size) {
            let batch = assemble_batch(&split.train, layout, k, horizon, chunk)?;
            let mut tape = Tape::new();
            let predicted = forward(&mut tape, store, &batch, config, layout)?;
            let loss = mse_loss(&mut tape, predicted, &batch)?;
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(EvalError::DivergedLoss { epoch, loss: value });
            }
            tape.backward(loss)?;
            tape.accumulate_param_grads(store);
            adam_step(store, &adam);
        }

        let mut tape = Tape::new();
        let predicted = forward(&mut tape, store, &val_batch, config, layout)?;
        let loss = mse_loss(&mut tape, predicted, &val_batch)?;
        let val_loss = tape.value(loss).item();
        if !val_loss.is_finite() {
            return Err(EvalError::DivergedLoss {
                epoch,
                loss: val_loss,
            });
        }

        if val_loss < best_val {
            best_val = val_loss;
            best_weights = store.snapshot();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
        }
        if epochs_since_best >= config.patience {
            break;
        }
    }
    store.restore(&best_weights);
    Ok(())
}

/// Non-overlapping forecasts over the test split, in window order.
fn forecast_test_split(
    frame: &SeriesFrame,
    config: &BaselineConfig,
    layout: &FeatureLayout,
    store: &ParamStore,
    forward: ForwardFn,
) -> Result<BaselineForecast> {
    let k = config.encoder_length;
    let horizon = config.horizon;
    let origins = evaluation_origins(frame, layout, k, horizon, horizon)?;
    if origins.is_empty() {
        return Err(EvalError::EmptyDataset("test"));
    }
    let batch = assemble_batch(frame, layout, k, horizon, &origins)?;
    let mut tape = Tape::new();
    let predicted_node = forward(&mut tape, store, &batch, config, layout)?;
    let predicted = tape.value(predicted_node).data().to_vec();
    let actual = batch.target_future.data().to_vec();
    let stamps = frame.timestamps();
    let timestamps: Vec<DateTime<Utc>> = origins
        .iter()
        .flat_map(|&t| stamps[t..t + horizon].iter().copied())
        .collect();
    Ok(BaselineForecast {
        timestamps,
        actual,
        predicted,
    })
}

impl MlpBaseline {
    /// Train on the split's train/validation frames and forecast its test
    /// frame at non-overlapping origins.
    pub fn fit(split: &DatasetSplit, config: &BaselineConfig) -> Result<(Self, BaselineForecast)> {
        config.validate()?;
        let layout = FeatureLayout::from_frame(&split.train, None)?;
        let mut store = ParamStore::new(config.seed);
        let input_dim = config.encoder_length * step_width(&layout);
        store.register_glorot("mlp.hidden.weight", input_dim, config.hidden_size);
        store.register_zeros("mlp.hidden.bias", config.hidden_size);
        store.register_glorot("mlp.out.weight", config.hidden_size, config.horizon);
        store.register_zeros("mlp.out.bias", config.horizon);

        fit(split, config, &layout, &mut store, mlp_forward)?;
        let forecast = forecast_test_split(&split.test, config, &layout, &store, mlp_forward)?;
        Ok((
            Self {
                config: config.clone(),
                layout,
                store,
            },
            forecast,
        ))
    }

    /// Forecast every window in `batch`; rows are `[window, horizon]`.
    pub fn predict(&self, batch: &Batch) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = mlp_forward(&mut tape, &self.store, batch, &self.config, &self.layout)?;
        Ok(tape.value(out).clone())
    }
}

impl LstmBaseline {
    /// Train on the split's train/validation frames and forecast its test
    /// frame at non-overlapping origins.
    pub fn fit(split: &DatasetSplit, config: &BaselineConfig) -> Result<(Self, BaselineForecast)> {
        config.validate()?;
        let layout = FeatureLayout::from_frame(&split.train, None)?;
        let mut store = ParamStore::new(config.seed);
        LstmParamIds::register(&mut store, "lstm", step_width(&layout), config.hidden_size);
        store.register_glorot("lstm.head.weight", config.hidden_size, config.horizon);
        store.register_zeros("lstm.head.bias", config.horizon);

        fit(split, config, &layout, &mut store, lstm_forward)?;
        let forecast = forecast_test_split(&split.test, config, &layout, &store, lstm_forward)?;
        Ok((
            Self {
                config: config.clone(),
                layout,
                store,
            },
            forecast,
        ))
    }

    /// Forecast every window in `batch`; rows are `[window, horizon]`.
    pub fn predict(&self, batch: &Batch) -> Result<Tensor> {
        let mut tape = Tape::new();
        let out = lstm_forward(&mut tape, &self.store, batch, &self.config, &self.layout)?;
        Ok(tape.value(out).clone())
    }
}

/// Train the feed-forward baseline on `split` and forecast its test frame.
pub fn mlp_baseline(
    split: &DatasetSplit,
    config: &BaselineConfig,
) -> Result<(MlpBaseline, BaselineForecast)> {
    MlpBaseline::fit(split, config)
}

/// Train the recurrent baseline on `split` and forecast its test frame.
pub fn lstm_baseline(
    split: &DatasetSplit,
    config: &BaselineConfig,
) -> Result<(LstmBaseline, BaselineForecast)> {
    LstmBaseline::fit(split, config)
}

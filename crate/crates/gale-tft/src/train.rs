//! Mini-batch training with Adam, validation-driven early stopping, and
//! best-weight restoration.

use crate::batch::{assemble_batch, window_origins};
use crate::loss::quantile_loss;
use crate::model::TftModel;
use crate::{Result, TftError};
use gale_autodiff::{adam_step, AdamConfig, Tape};
use gale_data::SeriesFrame;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochStats>,
    /// Index into `epochs` of the restored (best-validation) weights.
    pub best_epoch: usize,
}

/// Fit `model` on sliding windows over `train_frame`, scoring each epoch on
/// `val_frame`. Stops after `patience` epochs without validation improvement
/// (patience 0 stops after the first epoch) or at `max_epochs`, whichever
/// comes first, then restores the best-validation weights.
pub fn train(
    model: &mut TftModel,
    train_frame: &SeriesFrame,
    val_frame: &SeriesFrame,
) -> Result<TrainingHistory> {
    let config = model.config().clone();
    let layout = model.layout().clone();
    let k = config.encoder_length;
    let horizon = config.horizon;

    let mut train_origins = window_origins(train_frame, &layout, k, horizon, true)?;
    if train_origins.is_empty() {
        return Err(TftError::EmptyDataset("training"));
    }
    let val_origins = window_origins(val_frame, &layout, k, horizon, true)?;
    if val_origins.is_empty() {
        return Err(TftError::EmptyDataset("validation"));
    }

    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_weights = model.store().snapshot();
    let mut epochs_since_best = 0;

    for epoch in 0..config.max_epochs {
        train_origins.shuffle(&mut rng);
        let mut train_sum = 0.0;
        for chunk in train_origins.chunks(config.batch_size) {
            let batch = assemble_batch(train_frame, &layout, k, horizon, chunk)?;
            let mut tape = Tape::new();
            let out = model.forward(&mut tape, &mut rng, &batch, true)?;
            let target = tape.leaf(batch.target_future.clone());
            let loss = quantile_loss(&mut tape, out.forecast, target, &config.quantiles)?;
            let loss_value = tape.value(loss).item();
            if !loss_value.is_finite() {
                return Err(TftError::DivergedLoss {
                    epoch,
                    loss: loss_value,
                });
            }
            train_sum += loss_value * chunk.len() as f64;
            tape.backward(loss)?;
            tape.accumulate_param_grads(model.store_mut());
            adam_step(model.store_mut(), &adam);
        }
        let train_loss = train_sum / train_origins.len() as f64;
        let val_loss = evaluate(model, val_frame, &val_origins)?;
        if !val_loss.is_finite() {
            return Err(TftError::DivergedLoss {
                epoch,
                loss: val_loss,
            });
        }
        history.push(EpochStats {
            train_loss,
            val_loss,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_weights = model.store().snapshot();
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
        }
        if epochs_since_best >= config.patience {
            break;
        }
    }

    model.store_mut().restore(&best_weights);
    Ok(TrainingHistory {
        epochs: history,
        best_epoch,
    })
}

/// Window-weighted mean quantile loss of `model` over `origins`, with
/// dropout inactive.
pub fn evaluate(model: &TftModel, frame: &SeriesFrame, origins: &[usize]) -> Result<f64> {
    if origins.is_empty() {
        return Err(TftError::EmptyDataset("evaluation"));
    }
    let config = model.config();
    let layout = model.layout();
    let mut rng = crate::model::inference_rng();
    let mut sum = 0.0;
    for chunk in origins.chunks(config.batch_size) {
        let batch = assemble_batch(
            frame,
            layout,
            config.encoder_length,
            config.horizon,
            chunk,
        )?;
        let mut tape = Tape::new();
        let out = model.forward(&mut tape, &mut rng, &batch, false)?;
        let target = tape.leaf(batch.target_future.clone());
        let loss = quantile_loss(&mut tape, out.forecast, target, &config.quantiles)?;
        sum += tape.value(loss).item() * chunk.len() as f64;
    }
    Ok(sum / origins.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TftConfig;
    use crate::layout::FeatureLayout;
    use chrono::{TimeZone, Utc};
    use gale_autodiff::Tensor;
    use gale_data::{Aggregation, FeatureRole, FeatureSpec};

    fn frame_with_target(n: usize, target: impl Fn(usize) -> f64) -> SeriesFrame {
        let t0 = Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap();
        let timestamps: Vec<_> = (0..n)
            .map(|i| t0 + chrono::Duration::hours(i as i64))
            .collect();
        let schema = vec![
            FeatureSpec::new("wind", FeatureRole::ObservedPast, Aggregation::Mean),
            FeatureSpec::new("step", FeatureRole::KnownFuture, Aggregation::Mean),
            FeatureSpec::new("power", FeatureRole::Target, Aggregation::Mean),
        ];
        let columns = std::collections::BTreeMap::from([
            (
                "wind".to_string(),
                (0..n).map(|i| (i as f64 * 0.3).cos()).collect(),
            ),
            (
                "step".to_string(),
                (0..n).map(|i| (i % 24) as f64 / 23.0).collect::<Vec<_>>(),
            ),
            ("power".to_string(), (0..n).map(target).collect()),
        ]);
        SeriesFrame::new(timestamps, columns, chrono::Duration::hours(1), schema).unwrap()
    }

    fn quick_config(max_epochs: usize, patience: usize) -> TftConfig {
        TftConfig {
            hidden_size: 8,
            num_heads: 2,
            encoder_length: 4,
            horizon: 2,
            quantiles: vec![0.5],
            dropout: 0.0,
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs,
            patience,
            seed: 11,
        }
    }

    #[test]
    fn patience_zero_trains_exactly_one_epoch() {
        let frame = frame_with_target(40, |i| (i as f64 * 0.2).sin() * 0.5 + 0.5);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let mut model = TftModel::new(quick_config(10, 0), layout).unwrap();
        let history = train(&mut model, &frame, &frame).unwrap();
        assert_eq!(history.epochs.len(), 1);
        assert_eq!(history.best_epoch, 0);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let frame = frame_with_target(5, |_| 0.5);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let mut model = TftModel::new(quick_config(2, 1), layout).unwrap();
        assert!(matches!(
            train(&mut model, &frame, &frame),
            Err(TftError::EmptyDataset("training"))
        ));
    }

    #[test]
    fn non_finite_weights_surface_as_divergence() {
        let frame = frame_with_target(40, |i| i as f64 / 40.0);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let mut model = TftModel::new(quick_config(3, 2), layout).unwrap();
        let id = model.store().find("head.0.weight").unwrap();
        model
            .store_mut()
            .set_value(id, Tensor::full(&[8, 1], f64::NAN));
        match train(&mut model, &frame, &frame) {
            Err(TftError::DivergedLoss { epoch: 0, loss }) => assert!(loss.is_nan()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn training_restores_the_best_validation_weights() {
        let frame = frame_with_target(60, |i| (i as f64 * 0.4).sin() * 0.3 + 0.5);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let mut model = TftModel::new(quick_config(6, 6), layout).unwrap();
        let history = train(&mut model, &frame, &frame).unwrap();
        let best = history.epochs[history.best_epoch].val_loss;
        for stats in &history.epochs {
            assert!(stats.val_loss >= best);
        }
        // The restored weights must reproduce the recorded best loss.
        let origins = window_origins(&frame, model.layout(), 4, 2, true).unwrap();
        let rescored = evaluate(&model, &frame, &origins).unwrap();
        assert!((rescored - best).abs() < 1e-12);
    }
}

//! Per-mode prediction and recombination into original target units.
//!
//! After decomposition, each mode subseries gets its own trained model.
//! Forecasting runs every model at the same origin, takes the median
//! quantile as the point forecast, maps each mode back to original units,
//! sums the modes, holds the decomposition residual flat at its last
//! observed value, and clamps negative power to zero.

use crate::batch::assemble_batch;
use crate::model::TftModel;
use crate::{Result, TftError};
use chrono::{DateTime, Utc};
use gale_data::{NormalizationParams, SeriesFrame};
use std::io::Write;

/// Index of the quantile used as the point forecast: exact 0.5 when
/// present, otherwise the level closest to the median.
pub fn median_quantile_index(quantiles: &[f64]) -> usize {
    quantiles
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - 0.5)
                .abs()
                .partial_cmp(&(*b - 0.5).abs())
                .expect("quantiles are finite")
        })
        .map(|(i, _)| i)
        .expect("config validation requires at least one quantile")
}

/// Forecast every mode at window origin `origin` (a row index into each
/// mode's frame). `mode_frames[i]` holds mode `i` as its target column with
/// shared covariates. Returns one median-quantile series per mode, in the
/// normalized units the models were trained on.
pub fn predict_modes(
    models: &[TftModel],
    mode_frames: &[SeriesFrame],
    origin: usize,
) -> Result<Vec<Vec<f64>>> {
    if models.is_empty() || models.len() != mode_frames.len() {
        return Err(TftError::ModelCountMismatch {
            models: models.len(),
            modes: mode_frames.len(),
        });
    }
    models
        .iter()
        .zip(mode_frames)
        .map(|(model, frame)| {
            let config = model.config();
            let batch = assemble_batch(
                frame,
                model.layout(),
                config.encoder_length,
                config.horizon,
                &[origin],
            )?;
            let forecast = model.predict(&batch)?;
            let n_q = config.quantiles.len();
            let median = median_quantile_index(&config.quantiles);
            Ok(forecast
                .data()
                .iter()
                .skip(median)
                .step_by(n_q)
                .copied()
                .collect())
        })
        .collect()
}

/// Sum per-mode forecasts back into original units. `params[i]` carries the
/// min-max fit of `mode_frames[i]`; `target` names the column each mode was
/// stored under. `residual_persistence` is the decomposition residual's last
/// observed value in original units, held flat across the horizon.
pub fn aggregate_mode_forecasts(
    per_mode: &[Vec<f64>],
    params: &[NormalizationParams],
    target: &str,
    residual_persistence: f64,
) -> Result<Vec<f64>> {
    let first = per_mode
        .first()
        .ok_or(TftError::EmptyDataset("aggregation"))?;
    if per_mode.len() != params.len() {
        return Err(TftError::ShapeMismatch(format!(
            "{} mode forecasts but {} normalization fits",
            per_mode.len(),
            params.len()
        )));
    }
    let horizon = first.len();
    let mut total = vec![residual_persistence; horizon];
    for (forecast, fit) in per_mode.iter().zip(params) {
        if forecast.len() != horizon {
            return Err(TftError::ShapeMismatch(format!(
                "mode forecasts disagree on horizon: {} vs {horizon}",
                forecast.len()
            )));
        }
        for (acc, &v) in total.iter_mut().zip(forecast) {
            *acc += fit.denormalize_value(target, v)?;
        }
    }
    for v in &mut total {
        *v = v.max(0.0);
    }
    Ok(total)
}

/// Write forecast rows as `timestamp,horizon_step,quantile,value`.
/// `values` is row-major `[timestamps.len(), quantiles.len()]`.
pub fn write_forecast_csv<W: Write>(
    mut out: W,
    timestamps: &[DateTime<Utc>],
    quantiles: &[f64],
    values: &[f64],
) -> Result<()> {
    if values.len() != timestamps.len() * quantiles.len() {
        return Err(TftError::ShapeMismatch(format!(
            "{} values cannot cover {} steps x {} quantiles",
            values.len(),
            timestamps.len(),
            quantiles.len()
        )));
    }
    writeln!(out, "timestamp,horizon_step,quantile,value")?;
    for (step, ts) in timestamps.iter().enumerate() {
        for (qi, q) in quantiles.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                ts.to_rfc3339(),
                step + 1,
                q,
                values[step * quantiles.len() + qi]
            )?;
        }
    }
    Ok(())
}

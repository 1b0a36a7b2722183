//! Error metrics normalized by the maximum observed value, so results are
//! comparable across spans with different power levels.

use crate::{EvalError, Result};
use serde::{Deserialize, Serialize};

/// Normalized error summary over one evaluated span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean absolute error as a fraction of `y_max`.
    pub nmae: f64,
    /// Root-mean-square error as a fraction of `y_max`.
    pub nrmse: f64,
    /// Number of evaluated points.
    pub samples: usize,
    /// Normalizer: maximum actual value over the span, in original units.
    pub y_max: f64,
}

fn checked_max(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    let y_max = actual.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !(y_max > 0.0) {
        return Err(EvalError::ZeroMaxActual);
    }
    Ok(y_max)
}

fn nmae_with(actual: &[f64], predicted: &[f64], y_max: f64) -> f64 {
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, yhat)| (y - yhat).abs())
        .sum();
    sum / (actual.len() as f64 * y_max)
}

fn nrmse_with(actual: &[f64], predicted: &[f64], y_max: f64) -> f64 {
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, yhat)| (y - yhat) * (y - yhat))
        .sum();
    (sum / (actual.len() as f64 * y_max * y_max)).sqrt()
}

/// Mean absolute error divided by the span's maximum actual value and the
/// sample count.
pub fn nmae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let y_max = checked_max(actual, predicted)?;
    Ok(nmae_with(actual, predicted, y_max))
}

/// Root-mean-square error normalized by the span's maximum actual value.
pub fn nrmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let y_max = checked_max(actual, predicted)?;
    Ok(nrmse_with(actual, predicted, y_max))
}

/// Both metrics over one span. `normalizer` overrides the data-derived
/// maximum (e.g. with a turbine's rated capacity); by default the maximum
/// actual value is used.
pub fn metric_report(
    actual: &[f64],
    predicted: &[f64],
    normalizer: Option<f64>,
) -> Result<MetricReport> {
    let data_max = checked_max(actual, predicted)?;
    let y_max = match normalizer {
        Some(cap) if cap > 0.0 => cap,
        Some(_) => return Err(EvalError::ZeroMaxActual),
        None => data_max,
    };
    Ok(MetricReport {
        nmae: nmae_with(actual, predicted, y_max),
        nrmse: nrmse_with(actual, predicted, y_max),
        samples: actual.len(),
        y_max,
    })
}

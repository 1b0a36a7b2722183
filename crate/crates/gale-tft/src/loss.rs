//! Pinball (quantile) loss over a multi-horizon forecast.

use crate::{Result, TftError};
use gale_autodiff::{NodeId, Tape};

/// Mean over batch, horizon, and quantiles of
/// `max(q * (y - ŷ_q), (q - 1) * (y - ŷ_q))`, with uniform quantile weights.
/// `forecast` is `[B, τ, |Q|]`, `target` `[B, τ, 1]`.
pub fn quantile_loss(
    tape: &mut Tape,
    forecast: NodeId,
    target: NodeId,
    quantiles: &[f64],
) -> Result<NodeId> {
    let shape = tape.value(forecast).shape().to_vec();
    if shape.len() != 3 || shape[2] != quantiles.len() {
        return Err(TftError::ShapeMismatch(format!(
            "forecast {shape:?} does not hold {} quantiles",
            quantiles.len()
        )));
    }
    if tape.value(target).shape() != [shape[0], shape[1], 1] {
        return Err(TftError::ShapeMismatch(format!(
            "target {:?} does not align with forecast {shape:?}",
            tape.value(target).shape()
        )));
    }
    let mut total: Option<NodeId> = None;
    for (i, &q) in quantiles.iter().enumerate() {
        let pred = tape.slice(forecast, 2, i, 1)?;
        let err = tape.sub(target, pred)?;
        let over = tape.scale(err, q);
        let under = tape.scale(err, q - 1.0);
        let cell = tape.max_elem(over, under)?;
        total = Some(match total {
            Some(acc) => tape.add(acc, cell)?,
            None => cell,
        });
    }
    let summed = total.expect("validated nonempty quantiles");
    let mean = tape.mean(summed, None)?;
    Ok(tape.scale(mean, 1.0 / quantiles.len() as f64))
}

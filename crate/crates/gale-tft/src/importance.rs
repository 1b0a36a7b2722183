//! Summaries of the selection weights each input variable received.

use crate::batch::Batch;
use crate::model::{inference_rng, TftModel};
use crate::Result;
use gale_autodiff::Tape;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableImportance {
    pub name: String,
    /// Mean selection weight over every batch row (and time step).
    pub mean: f64,
    /// Population standard deviation of the same weights.
    pub std: f64,
}

/// Per-branch selection weight statistics; a variable with consistently
/// high mean weight is one the model relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub static_vars: Vec<VariableImportance>,
    pub past: Vec<VariableImportance>,
    pub future: Vec<VariableImportance>,
}

/// Run inference on `batch` and reduce each selection network's weights to
/// per-variable mean and standard deviation.
pub fn feature_importance(model: &TftModel, batch: &Batch) -> Result<FeatureImportance> {
    let mut tape = Tape::new();
    let mut rng = inference_rng();
    let out = model.forward(&mut tape, &mut rng, batch, false)?;
    let layout = model.layout();

    let summarize = |data: &[f64], names: &[String]| -> Vec<VariableImportance> {
        let n = names.len();
        names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let values: Vec<f64> = data.iter().skip(i).step_by(n).copied().collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / values.len() as f64;
                VariableImportance {
                    name: name.clone(),
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect()
    };

    let static_names: Vec<String> = layout.static_columns.iter().map(|c| c.name.clone()).collect();
    let mut past_names: Vec<String> = layout
        .past_variables()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    past_names.push(layout.target_column.clone());
    let future_names: Vec<String> = layout.known_columns.iter().map(|c| c.name.clone()).collect();

    Ok(FeatureImportance {
        static_vars: match out.static_weights {
            Some(node) => summarize(tape.value(node).data(), &static_names),
            None => Vec::new(),
        },
        past: summarize(tape.value(out.past_weights).data(), &past_names),
        future: summarize(tape.value(out.future_weights).data(), &future_names),
    })
}

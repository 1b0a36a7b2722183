use crate::{Result, TunerError};
use gale_tft::TftConfig;
use gale_tpe::{Config, ParamKind, ParamSpec, ParamValue, SearchSpace};

/// Tunable forecaster hyperparameters: capacity, attention width,
/// regularization, and step size.
///
/// The hidden size is searched as a quarter-width `q` mapped to `4q`, and the
/// head count as an exponent mapped to `2^e`, so every sampled pair keeps the
/// hidden size divisible by the head count. Window geometry, quantiles, and
/// the training budget describe the task rather than the model and stay fixed
/// by the caller.
pub fn model_space() -> SearchSpace {
    let params = vec![
        spec("tft_hidden_quarter", ParamKind::IntUniform { lo: 2, hi: 8 }),
        spec("tft_log2_heads", ParamKind::IntUniform { lo: 0, hi: 2 }),
        spec(
            "tft_learning_rate",
            ParamKind::LogUniform {
                lo: 1e-4,
                hi: 3e-2,
            },
        ),
        spec("tft_dropout", ParamKind::Uniform { lo: 0.0, hi: 0.3 }),
    ];
    SearchSpace::new(params).expect("static spaces are well-formed")
}

fn spec(name: &str, kind: ParamKind) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        kind,
    }
}

/// Overlay a sampled point from [`model_space`] onto `base`, leaving
/// everything the space does not cover (window geometry, quantiles, training
/// budget, seed) untouched.
pub fn apply_model_sample(base: &TftConfig, sample: &Config) -> Result<TftConfig> {
    model_space()
        .validate_config(sample)
        .map_err(|e| TunerError::InvalidConfig(e.to_string()))?;
    let mut cfg = base.clone();
    cfg.hidden_size = 4 * int(sample, "tft_hidden_quarter")? as usize;
    cfg.num_heads = 1 << int(sample, "tft_log2_heads")?;
    cfg.learning_rate = float(sample, "tft_learning_rate")?;
    cfg.dropout = float(sample, "tft_dropout")?;
    cfg.validate()?;
    Ok(cfg)
}

fn int(sample: &Config, name: &str) -> Result<i64> {
    sample
        .get(name)
        .and_then(ParamValue::as_i64)
        .ok_or_else(|| TunerError::InvalidConfig(format!("missing integer `{name}`")))
}

fn float(sample: &Config, name: &str) -> Result<f64> {
    sample
        .get(name)
        .and_then(ParamValue::as_f64)
        .ok_or_else(|| TunerError::InvalidConfig(format!("missing number `{name}`")))
}

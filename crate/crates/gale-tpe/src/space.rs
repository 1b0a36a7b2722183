use crate::{Result, TpeError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Prior distribution of a single hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    IntUniform { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

/// A sampled hyperparameter value. Integer-valued JSON deserializes to
/// `Int`, so the variant order matters for the untagged representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Float(v) => Some(*v),
            ParamValue::Choice(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Choice(v) => Some(v),
            _ => None,
        }
    }
}

/// One concrete assignment of every parameter in a space. A sorted map keeps
/// serialization order stable across runs.
pub type Config = BTreeMap<String, ParamValue>;

/// The domain a run searches over: an ordered list of named parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for p in &params {
            if !seen.insert(p.name.clone()) {
                return Err(TpeError::InvalidSpace(format!(
                    "duplicate parameter name `{}`",
                    p.name
                )));
            }
            match &p.kind {
                ParamKind::Uniform { lo, hi } => {
                    if !(lo < hi) {
                        return Err(TpeError::InvalidSpace(format!(
                            "`{}`: lo {lo} must be below hi {hi}",
                            p.name
                        )));
                    }
                }
                ParamKind::LogUniform { lo, hi } => {
                    if !(*lo > 0.0 && lo < hi) {
                        return Err(TpeError::InvalidSpace(format!(
                            "`{}`: log-uniform needs 0 < lo < hi, got [{lo}, {hi}]",
                            p.name
                        )));
                    }
                }
                ParamKind::IntUniform { lo, hi } => {
                    if lo >= hi {
                        return Err(TpeError::InvalidSpace(format!(
                            "`{}`: lo {lo} must be below hi {hi}",
                            p.name
                        )));
                    }
                }
                ParamKind::Categorical { choices } => {
                    if choices.is_empty() {
                        return Err(TpeError::InvalidSpace(format!(
                            "`{}`: categorical domain is empty",
                            p.name
                        )));
                    }
                }
            }
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Check that `config` assigns every parameter a value of the right kind
    /// inside its bounds.
    pub fn validate_config(&self, config: &Config) -> Result<()> {
        for p in &self.params {
            let value = config
                .get(&p.name)
                .ok_or_else(|| TpeError::MissingParameter(p.name.clone()))?;
            let wrong = || TpeError::WrongKind {
                name: p.name.clone(),
                expected: match &p.kind {
                    ParamKind::Uniform { .. } => "uniform",
                    ParamKind::LogUniform { .. } => "log_uniform",
                    ParamKind::IntUniform { .. } => "int_uniform",
                    ParamKind::Categorical { .. } => "categorical",
                }
                .to_string(),
            };
            match (&p.kind, value) {
                (ParamKind::Uniform { lo, hi }, v) => {
                    let x = v.as_f64().ok_or_else(wrong)?;
                    if v.as_str().is_some() || x < *lo || x > *hi {
                        return Err(TpeError::OutOfBoundsSample {
                            name: p.name.clone(),
                            value: x,
                            lo: *lo,
                            hi: *hi,
                        });
                    }
                }
                (ParamKind::LogUniform { lo, hi }, v) => {
                    let x = v.as_f64().ok_or_else(wrong)?;
                    if x < *lo || x > *hi {
                        return Err(TpeError::OutOfBoundsSample {
                            name: p.name.clone(),
                            value: x,
                            lo: *lo,
                            hi: *hi,
                        });
                    }
                }
                (ParamKind::IntUniform { lo, hi }, v) => {
                    let x = v.as_i64().ok_or_else(wrong)?;
                    if x < *lo || x > *hi {
                        return Err(TpeError::OutOfBoundsSample {
                            name: p.name.clone(),
                            value: x as f64,
                            lo: *lo as f64,
                            hi: *hi as f64,
                        });
                    }
                }
                (ParamKind::Categorical { choices }, ParamValue::Choice(c)) => {
                    if !choices.contains(c) {
                        return Err(TpeError::UnknownChoice {
                            name: p.name.clone(),
                            value: c.clone(),
                        });
                    }
                }
                (ParamKind::Categorical { .. }, _) => return Err(wrong()),
            }
        }
        for name in config.keys() {
            if self.get(name).is_none() {
                return Err(TpeError::UnknownParameter(name.clone()));
            }
        }
        Ok(())
    }
}

/// Draw one config where each parameter follows its prior independently.
pub fn sample_random<R: Rng>(space: &SearchSpace, rng: &mut R) -> Config {
    let mut config = Config::new();
    for p in space.params() {
        let value = match &p.kind {
            ParamKind::Uniform { lo, hi } => ParamValue::Float(rng.gen_range(*lo..*hi)),
            ParamKind::LogUniform { lo, hi } => {
                ParamValue::Float(rng.gen_range(lo.ln()..hi.ln()).exp())
            }
            ParamKind::IntUniform { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            ParamKind::Categorical { choices } => {
                ParamValue::Choice(choices[rng.gen_range(0..choices.len())].clone())
            }
        };
        config.insert(p.name.clone(), value);
    }
    config
}

use crate::config::{DecompositionConfig, DecompositionKind};
use crate::{DecompError, Result};
use gale_tpe::{Config, ParamKind, ParamSpec, ParamValue, SearchSpace};

/// Tunable hyperparameters of each decomposition method.
///
/// Periods are calendar knowledge and stay fixed by the caller, so MSTL only
/// exposes the smoothing knobs. The loess window is searched as a half-width
/// `v` mapped to the odd window `2v + 1`, covering 7 through 101. A single
/// searched window applies to every period.
pub fn param_space(kind: DecompositionKind) -> SearchSpace {
    let params = match kind {
        DecompositionKind::Vmd => vec![
            spec("vmd_k", ParamKind::IntUniform { lo: 2, hi: 12 }),
            spec(
                "vmd_alpha",
                ParamKind::LogUniform {
                    lo: 100.0,
                    hi: 10_000.0,
                },
            ),
            spec(
                "vmd_tol",
                ParamKind::LogUniform {
                    lo: 1e-8,
                    hi: 1e-5,
                },
            ),
            spec(
                "vmd_tau_dual",
                ParamKind::Categorical {
                    choices: vec!["0".into(), "0.1".into(), "1.0".into()],
                },
            ),
        ],
        DecompositionKind::Eemd => vec![
            spec("eemd_ensembles", ParamKind::IntUniform { lo: 8, hi: 64 }),
            spec(
                "eemd_noise_ratio",
                ParamKind::Uniform { lo: 0.05, hi: 0.4 },
            ),
            spec("eemd_max_imfs", ParamKind::IntUniform { lo: 4, hi: 10 }),
        ],
        DecompositionKind::Mstl => vec![
            spec("mstl_iterations", ParamKind::IntUniform { lo: 1, hi: 3 }),
            spec(
                "mstl_loess_half_width",
                ParamKind::IntUniform { lo: 3, hi: 50 },
            ),
        ],
    };
    SearchSpace::new(params).expect("static spaces are well-formed")
}

fn spec(name: &str, kind: ParamKind) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        kind,
    }
}

/// Overlay a sampled point from `param_space(base.kind)` onto `base`,
/// leaving everything the space does not cover (periods, seeds, iteration
/// caps) untouched.
pub fn apply_sample(base: &DecompositionConfig, sample: &Config) -> Result<DecompositionConfig> {
    param_space(base.kind)
        .validate_config(sample)
        .map_err(|e| DecompError::InvalidConfig(e.to_string()))?;
    let mut cfg = base.clone();
    match base.kind {
        DecompositionKind::Vmd => {
            cfg.vmd.k = int(sample, "vmd_k")? as usize;
            cfg.vmd.alpha = float(sample, "vmd_alpha")?;
            cfg.vmd.tol = float(sample, "vmd_tol")?;
            let tau = choice(sample, "vmd_tau_dual")?;
            cfg.vmd.tau_dual = tau
                .parse()
                .map_err(|_| DecompError::InvalidConfig(format!("bad tau_dual `{tau}`")))?;
        }
        DecompositionKind::Eemd => {
            cfg.eemd.ensembles = int(sample, "eemd_ensembles")? as usize;
            cfg.eemd.noise_ratio = float(sample, "eemd_noise_ratio")?;
            cfg.eemd.max_imfs = int(sample, "eemd_max_imfs")? as usize;
        }
        DecompositionKind::Mstl => {
            cfg.mstl.iterations = int(sample, "mstl_iterations")? as usize;
            let width = 2 * int(sample, "mstl_loess_half_width")? as usize + 1;
            cfg.mstl.loess_windows = vec![width; cfg.mstl.periods.len()];
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn int(sample: &Config, name: &str) -> Result<i64> {
    sample
        .get(name)
        .and_then(ParamValue::as_i64)
        .ok_or_else(|| DecompError::InvalidConfig(format!("missing integer `{name}`")))
}

fn float(sample: &Config, name: &str) -> Result<f64> {
    sample
        .get(name)
        .and_then(ParamValue::as_f64)
        .ok_or_else(|| DecompError::InvalidConfig(format!("missing real `{name}`")))
}

fn choice<'a>(sample: &'a Config, name: &str) -> Result<&'a str> {
    sample
        .get(name)
        .and_then(ParamValue::as_str)
        .ok_or_else(|| DecompError::InvalidConfig(format!("missing choice `{name}`")))
}

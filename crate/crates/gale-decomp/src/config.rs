use crate::{DecompError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Vmd,
    Eemd,
    Mstl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VmdInit {
    Zero,
    Uniform,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmdParams {
    /// Number of modes to extract.
    pub k: usize,
    /// Bandwidth penalty; larger values give narrower modes.
    pub alpha: f64,
    /// Dual-ascent step for the reconstruction constraint (0 disables it).
    pub tau_dual: f64,
    /// Convergence threshold on the summed relative mode change.
    pub tol: f64,
    /// Pin the first center frequency to zero.
    pub dc_mode: bool,
    pub init: VmdInit,
    pub max_iter: usize,
    /// Seed for the `random` center-frequency initialization.
    pub seed: u64,
}

impl Default for VmdParams {
    fn default() -> Self {
        Self {
            k: 4,
            alpha: 2000.0,
            tau_dual: 0.0,
            tol: 1e-7,
            dc_mode: false,
            init: VmdInit::Uniform,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EemdParams {
    pub ensembles: usize,
    /// Noise standard deviation as a fraction of the signal's.
    pub noise_ratio: f64,
    pub max_imfs: usize,
    pub max_siftings: usize,
    pub seed: u64,
}

impl Default for EemdParams {
    fn default() -> Self {
        Self {
            ensembles: 16,
            noise_ratio: 0.2,
            max_imfs: 8,
            max_siftings: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MstlParams {
    /// Seasonal cycle lengths in samples, ascending.
    pub periods: Vec<usize>,
    /// Odd loess window per period (same length as `periods`).
    pub loess_windows: Vec<usize>,
    pub iterations: usize,
}

impl Default for MstlParams {
    fn default() -> Self {
        Self {
            periods: vec![24],
            loess_windows: vec![11],
            iterations: 2,
        }
    }
}

/// Settings for all three algorithms; only the active kind's block is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub kind: DecompositionKind,
    #[serde(default)]
    pub vmd: VmdParams,
    #[serde(default)]
    pub eemd: EemdParams,
    #[serde(default)]
    pub mstl: MstlParams,
}

impl DecompositionConfig {
    pub fn new(kind: DecompositionKind) -> Self {
        Self {
            kind,
            vmd: VmdParams::default(),
            eemd: EemdParams::default(),
            mstl: MstlParams::default(),
        }
    }

    /// Validate the active kind's parameter block.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DecompError::InvalidConfig(msg));
        match self.kind {
            DecompositionKind::Vmd => {
                let v = &self.vmd;
                if v.k < 1 {
                    return bad("vmd.k must be at least 1".into());
                }
                if v.alpha <= 0.0 {
                    return bad(format!("vmd.alpha must be positive, got {}", v.alpha));
                }
                if v.tau_dual < 0.0 {
                    return bad(format!("vmd.tau_dual must be non-negative, got {}", v.tau_dual));
                }
                if v.tol <= 0.0 {
                    return bad(format!("vmd.tol must be positive, got {}", v.tol));
                }
                if v.max_iter == 0 {
                    return bad("vmd.max_iter must be at least 1".into());
                }
            }
            DecompositionKind::Eemd => {
                let e = &self.eemd;
                if e.ensembles < 1 {
                    return bad("eemd.ensembles must be at least 1".into());
                }
                if e.noise_ratio < 0.0 {
                    return bad(format!(
                        "eemd.noise_ratio must be non-negative, got {}",
                        e.noise_ratio
                    ));
                }
                if e.max_imfs < 1 || e.max_siftings < 1 {
                    return bad("eemd.max_imfs and max_siftings must be at least 1".into());
                }
            }
            DecompositionKind::Mstl => {
                let m = &self.mstl;
                if m.periods.is_empty() {
                    return bad("mstl.periods must not be empty".into());
                }
                if m.periods.iter().any(|&p| p < 2) {
                    return bad("mstl periods must be at least 2".into());
                }
                if m.periods.windows(2).any(|w| w[0] > w[1]) {
                    return bad("mstl.periods must be sorted ascending".into());
                }
                if m.loess_windows.len() != m.periods.len() {
                    return bad(format!(
                        "mstl needs one loess window per period ({} vs {})",
                        m.loess_windows.len(),
                        m.periods.len()
                    ));
                }
                if m.loess_windows.iter().any(|&w| w < 3 || w % 2 == 0) {
                    return bad("mstl loess windows must be odd and at least 3".into());
                }
                if m.iterations < 1 {
                    return bad("mstl.iterations must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_finite(signal: &[f64]) -> Result<()> {
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(DecompError::NonFiniteInput(i));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_only_the_active_kind() {
        let mut cfg = DecompositionConfig::new(DecompositionKind::Vmd);
        cfg.eemd.ensembles = 0;
        cfg.validate().unwrap();
        cfg.kind = DecompositionKind::Eemd;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_each_bad_field() {
        let mut cfg = DecompositionConfig::new(DecompositionKind::Vmd);
        cfg.vmd.alpha = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = DecompositionConfig::new(DecompositionKind::Mstl);
        cfg.mstl.periods = vec![24, 12];
        cfg.mstl.loess_windows = vec![11, 11];
        assert!(cfg.validate().is_err());
        cfg.mstl.periods = vec![12, 24];
        cfg.mstl.loess_windows = vec![10, 11];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = DecompositionConfig::new(DecompositionKind::Mstl);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: DecompositionConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}

use crate::config::DecompositionConfig;
use crate::{DecompError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The output of a decomposition: mode subseries plus the residual that
/// closes the additive identity `sum(modes) + residual = input`.
///
/// Degenerate inputs (for example a monotone ramp under ensemble sifting)
/// can yield zero modes; the residual then carries the whole signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
    /// Cycles per sample, ascending; present for frequency-domain methods.
    pub center_frequencies: Option<Vec<f64>>,
    pub config: DecompositionConfig,
    pub input_length: usize,
}

#[derive(Serialize, Deserialize)]
struct ModeSetMeta {
    config: DecompositionConfig,
    center_frequencies: Option<Vec<f64>>,
    input_length: usize,
    n_modes: usize,
    /// Max absolute pointwise error of `sum(modes) + residual` against the
    /// input, recorded at decomposition time.
    reconstruction_error: f64,
}

impl ModeSet {
    pub(crate) fn from_parts(
        modes: Vec<Vec<f64>>,
        signal: &[f64],
        center_frequencies: Option<Vec<f64>>,
        config: DecompositionConfig,
    ) -> Self {
        let mut residual = signal.to_vec();
        for mode in &modes {
            for (r, m) in residual.iter_mut().zip(mode) {
                *r -= m;
            }
        }
        Self {
            modes,
            residual,
            center_frequencies,
            config,
            input_length: signal.len(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Max absolute pointwise deviation of the reconstruction from `signal`.
    pub fn reconstruction_error(&self, signal: &[f64]) -> f64 {
        reconstruct(self)
            .iter()
            .zip(signal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Write `modes.csv` (one column per mode plus the residual) and
    /// `meta.json` into `dir`.
    pub fn save(&self, dir: &Path, signal: Option<&[f64]>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let meta = ModeSetMeta {
            config: self.config.clone(),
            center_frequencies: self.center_frequencies.clone(),
            input_length: self.input_length,
            n_modes: self.modes.len(),
            reconstruction_error: signal.map(|s| self.reconstruction_error(s)).unwrap_or(0.0),
        };
        let json = serde_json::to_string_pretty(&meta)
            .map_err(|e| DecompError::Format(e.to_string()))?;
        std::fs::write(dir.join("meta.json"), json)?;

        let mut out = String::new();
        let header: Vec<String> = (1..=self.modes.len())
            .map(|k| format!("mode_{k}"))
            .chain(std::iter::once("residual".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.input_length {
            let row: Vec<String> = self
                .modes
                .iter()
                .map(|m| format!("{}", m[i]))
                .chain(std::iter::once(format!("{}", self.residual[i])))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(dir.join("modes.csv"), out)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ModeSet> {
        let json = std::fs::read_to_string(dir.join("meta.json"))?;
        let meta: ModeSetMeta =
            serde_json::from_str(&json).map_err(|e| DecompError::Format(e.to_string()))?;
        let csv = std::fs::read_to_string(dir.join("modes.csv"))?;
        let mut lines = csv.lines();
        let header = lines
            .next()
            .ok_or_else(|| DecompError::Format("modes.csv is empty".into()))?;
        let n_cols = header.split(',').count();
        if n_cols != meta.n_modes + 1 {
            return Err(DecompError::Format(format!(
                "modes.csv has {n_cols} columns, meta describes {}",
                meta.n_modes + 1
            )));
        }
        let mut modes = vec![Vec::with_capacity(meta.input_length); meta.n_modes];
        let mut residual = Vec::with_capacity(meta.input_length);
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != n_cols {
                return Err(DecompError::Format(format!("row {i} has {} cells", cells.len())));
            }
            for (k, cell) in cells.iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| DecompError::Format(format!("row {i}: bad number `{cell}`")))?;
                if k < meta.n_modes {
                    modes[k].push(v);
                } else {
                    residual.push(v);
                }
            }
        }
        if residual.len() != meta.input_length {
            return Err(DecompError::Format(format!(
                "modes.csv has {} rows, meta describes {}",
                residual.len(),
                meta.input_length
            )));
        }
        Ok(ModeSet {
            modes,
            residual,
            center_frequencies: meta.center_frequencies,
            config: meta.config,
            input_length: meta.input_length,
        })
    }
}

/// Elementwise sum of all modes plus the residual.
pub fn reconstruct(modeset: &ModeSet) -> Vec<f64> {
    let mut out = modeset.residual.clone();
    for mode in &modeset.modes {
        for (o, m) in out.iter_mut().zip(mode) {
            *o += m;
        }
    }
    out
}

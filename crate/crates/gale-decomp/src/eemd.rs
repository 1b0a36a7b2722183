use crate::config::{check_finite, DecompositionConfig};
use crate::emd::{emd_sift_capped, local_extrema};
use crate::modeset::ModeSet;
use crate::{DecompError, Result};
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::Normal;

/// Ensemble empirical mode decomposition.
///
/// Each ensemble member sifts `signal + noise` where the noise is Gaussian
/// with standard deviation `noise_ratio * std(signal)`, drawn from a stream
/// seeded by `seed + member index` so runs are reproducible and members are
/// independent. Mode `k` is the mean of IMF `k` across members; members that
/// produced fewer IMFs contribute zeros. Members run in parallel but are
/// averaged in index order, keeping the result bit-identical for a seed.
pub fn eemd_decompose(signal: &[f64], cfg: &DecompositionConfig) -> Result<ModeSet> {
    cfg.validate()?;
    check_finite(signal)?;
    let p = &cfg.eemd;
    let n = signal.len();
    if n < 10 {
        return Err(DecompError::SignalTooShort { len: n, min: 10 });
    }

    // A signal that plain sifting would leave untouched (fewer than two
    // maxima or minima) carries no oscillation to extract; injecting noise
    // would only average noise artifacts into fake modes.
    let (maxima, minima) = local_extrema(signal);
    if maxima.len() < 2 || minima.len() < 2 {
        return Ok(ModeSet::from_parts(Vec::new(), signal, None, cfg.clone()));
    }

    let noise_std = p.noise_ratio * population_std(signal);
    let runs: Vec<Vec<Vec<f64>>> = (0..p.ensembles)
        .into_par_iter()
        .map(|member| {
            let noisy = if noise_std > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(member as u64));
                let normal = Normal::new(0.0, noise_std).expect("std is positive and finite");
                signal
                    .iter()
                    .map(|&v| v + normal.sample(&mut rng))
                    .collect()
            } else {
                signal.to_vec()
            };
            emd_sift_capped(&noisy, p.max_siftings, p.max_imfs).map(|r| r.imfs)
        })
        .collect::<Result<_>>()?;

    let n_modes = runs.iter().map(Vec::len).max().unwrap_or(0);
    let scale = 1.0 / p.ensembles as f64;
    let mut modes = vec![vec![0.0; n]; n_modes];
    for imfs in &runs {
        for (k, imf) in imfs.iter().enumerate() {
            for (acc, v) in modes[k].iter_mut().zip(imf) {
                *acc += v * scale;
            }
        }
    }

    Ok(ModeSet::from_parts(modes, signal, None, cfg.clone()))
}

fn population_std(signal: &[f64]) -> f64 {
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    (signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

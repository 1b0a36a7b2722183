use crate::config::{check_finite, DecompositionConfig, VmdInit};
use crate::modeset::ModeSet;
use crate::{DecompError, Result};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

/// Variational mode decomposition via ADMM in the frequency domain.
///
/// The signal is mirror-extended to twice its length to suppress boundary
/// artifacts, transformed with a forward FFT, and the modes are estimated on
/// the analytic (non-negative frequency) half-spectrum:
///
/// ```text
/// u_k <- (f - sum_{i != k} u_i + lambda/2) / (1 + 2 alpha (w - w_k)^2)
/// w_k <- sum(w |u_k|^2) / sum(|u_k|^2)
/// lambda <- lambda + tau_dual (f - sum_k u_k)
/// ```
///
/// Iteration stops when `sum_k ||u_k' - u_k||^2 / ||u_k||^2` drops below
/// `tol` (a vanished mode contributes zero) or `max_iter` is reached. Modes
/// are returned in ascending center-frequency order, cropped back to the
/// original length, with `residual = signal - sum(modes)`.
pub fn vmd_decompose(signal: &[f64], cfg: &DecompositionConfig) -> Result<ModeSet> {
    cfg.validate()?;
    check_finite(signal)?;
    let p = &cfg.vmd;
    let k_modes = p.k;
    let n = signal.len();
    if n < 2 * k_modes {
        return Err(DecompError::SignalTooShort {
            len: n,
            min: 2 * k_modes,
        });
    }

    let extended = mirror_extend(signal);
    let t = extended.len();
    let half = t / 2;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(t);
    let mut buf: Vec<Complex<f64>> = extended.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    // Non-negative half of the spectrum: bin i carries w = i / t in [0, 0.5).
    let f_hat: Vec<Complex<f64>> = buf[..half].to_vec();
    let omega_grid: Vec<f64> = (0..half).map(|i| i as f64 / t as f64).collect();

    let mut omega = initial_frequencies(p.init, k_modes, p.seed);
    if p.dc_mode {
        omega[0] = 0.0;
    }
    let zero = vec![Complex::new(0.0, 0.0); half];
    let mut u_hat = vec![zero.clone(); k_modes];
    let mut lambda_hat = zero.clone();
    let mut sum_all = zero.clone();

    for _ in 0..p.max_iter {
        let previous = u_hat.clone();
        for k in 0..k_modes {
            let two_alpha = 2.0 * p.alpha;
            for i in 0..half {
                let others = sum_all[i] - u_hat[k][i];
                let numerator = f_hat[i] - others + lambda_hat[i] * 0.5;
                let d = omega_grid[i] - omega[k];
                let updated = numerator / (1.0 + two_alpha * d * d);
                sum_all[i] += updated - u_hat[k][i];
                u_hat[k][i] = updated;
            }
            if !(p.dc_mode && k == 0) {
                let mut weighted = 0.0;
                let mut energy = 0.0;
                for i in 0..half {
                    let e = u_hat[k][i].norm_sqr();
                    weighted += omega_grid[i] * e;
                    energy += e;
                }
                if energy > 0.0 {
                    omega[k] = weighted / energy;
                }
            }
        }
        for i in 0..half {
            lambda_hat[i] += p.tau_dual * (f_hat[i] - sum_all[i]);
        }
        if convergence_ratio(&u_hat, &previous) < p.tol {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k_modes).collect();
    order.sort_by(|&a, &b| omega[a].total_cmp(&omega[b]));
    let center_frequencies: Vec<f64> = order.iter().map(|&k| omega[k]).collect();

    let ifft = planner.plan_fft_inverse(t);
    let offset = n / 2;
    let modes: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut spectrum = hermitian_completion(&u_hat[k], t);
            ifft.process(&mut spectrum);
            spectrum[offset..offset + n]
                .iter()
                .map(|c| c.re / t as f64)
                .collect()
        })
        .collect();

    Ok(ModeSet::from_parts(
        modes,
        signal,
        Some(center_frequencies),
        cfg.clone(),
    ))
}

/// Pad with the reflected first half on the left and the reflected second
/// half on the right, doubling the length.
fn mirror_extend(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let left = n / 2;
    let mut out = Vec::with_capacity(2 * n);
    out.extend(signal[..left].iter().rev());
    out.extend_from_slice(signal);
    out.extend(signal[left..].iter().rev());
    out
}

fn initial_frequencies(init: VmdInit, k_modes: usize, seed: u64) -> Vec<f64> {
    match init {
        VmdInit::Zero => vec![0.0; k_modes],
        VmdInit::Uniform => (0..k_modes)
            .map(|k| k as f64 * 0.5 / k_modes as f64)
            .collect(),
        VmdInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k_modes).map(|_| rng.gen::<f64>() * 0.5).collect()
        }
    }
}

/// `sum_k ||u_k' - u_k||^2 / ||u_k||^2`. A mode that stays identically zero
/// contributes zero (so a zero signal converges immediately); a mode that
/// grows out of a zero spectrum has not converged at all.
fn convergence_ratio(current: &[Vec<Complex<f64>>], previous: &[Vec<Complex<f64>>]) -> f64 {
    current
        .iter()
        .zip(previous)
        .map(|(cur, prev)| {
            let diff: f64 = cur
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let base: f64 = prev.iter().map(|c| c.norm_sqr()).sum();
            if base > 0.0 {
                diff / base
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Rebuild the full spectrum from the non-negative half so the inverse
/// transform of a real signal's modes is real: negative bins mirror the
/// conjugate, the Nyquist bin takes the conjugate of the topmost kept bin.
fn hermitian_completion(half_spectrum: &[Complex<f64>], t: usize) -> Vec<Complex<f64>> {
    let half = half_spectrum.len();
    let mut full = vec![Complex::new(0.0, 0.0); t];
    full[..half].copy_from_slice(half_spectrum);
    full[half] = half_spectrum[half - 1].conj();
    for i in 1..half {
        full[t - i] = half_spectrum[i].conj();
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DecompositionKind, VmdParams};
    use crate::modeset::reconstruct;

    fn vmd_config(k: usize) -> DecompositionConfig {
        let mut cfg = DecompositionConfig::new(DecompositionKind::Vmd);
        cfg.vmd = VmdParams {
            k,
            ..VmdParams::default()
        };
        cfg
    }

    fn tone(freq: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64).cos())
            .collect()
    }

    #[test]
    fn zero_signal_yields_zero_modes_and_residual() {
        let set = vmd_decompose(&vec![0.0; 128], &vmd_config(3)).unwrap();
        assert_eq!(set.n_modes(), 3);
        for mode in &set.modes {
            assert!(mode.iter().all(|&v| v == 0.0));
        }
        assert!(set.residual.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_short_signal() {
        let err = vmd_decompose(&[1.0, 2.0, 3.0], &vmd_config(2)).unwrap_err();
        assert!(matches!(err, DecompError::SignalTooShort { len: 3, min: 4 }));
    }

    #[test]
    fn rejects_non_finite_input() {
        let err = vmd_decompose(&[1.0, f64::NAN, 3.0, 4.0], &vmd_config(1)).unwrap_err();
        assert!(matches!(err, DecompError::NonFiniteInput(1)));
    }

    #[test]
    fn center_frequencies_are_sorted_ascending() {
        let signal: Vec<f64> = tone(0.21, 256)
            .iter()
            .zip(tone(0.04, 256))
            .map(|(a, b)| a + b)
            .collect();
        let set = vmd_decompose(&signal, &vmd_config(2)).unwrap();
        let freqs = set.center_frequencies.as_ref().unwrap();
        assert!(freqs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dc_mode_pins_first_frequency_to_zero() {
        let signal: Vec<f64> = tone(0.1, 256).iter().map(|v| v + 5.0).collect();
        let mut cfg = vmd_config(2);
        cfg.vmd.dc_mode = true;
        let set = vmd_decompose(&signal, &cfg).unwrap();
        assert_eq!(set.center_frequencies.as_ref().unwrap()[0], 0.0);
    }

    #[test]
    fn converged_tone_keeps_energy_below_signal_energy_budget() {
        let signal = tone(0.07, 512);
        let set = vmd_decompose(&signal, &vmd_config(1)).unwrap();
        let mode_energy: f64 = set.modes[0].iter().map(|v| v * v).sum();
        let signal_energy: f64 = signal.iter().map(|v| v * v).sum();
        assert!(mode_energy <= signal_energy * 1.01);
    }

    #[test]
    fn mirror_extension_doubles_length_and_reflects() {
        assert_eq!(
            mirror_extend(&[1.0, 2.0, 3.0, 4.0]),
            vec![2.0, 1.0, 1.0, 2.0, 3.0, 4.0, 4.0, 3.0]
        );
        assert_eq!(
            mirror_extend(&[1.0, 2.0, 3.0]),
            vec![1.0, 1.0, 2.0, 3.0, 3.0, 2.0]
        );
    }

    #[test]
    fn random_init_is_deterministic_per_seed() {
        assert_eq!(
            initial_frequencies(VmdInit::Random, 4, 7),
            initial_frequencies(VmdInit::Random, 4, 7)
        );
        assert_ne!(
            initial_frequencies(VmdInit::Random, 4, 7),
            initial_frequencies(VmdInit::Random, 4, 8)
        );
    }

    #[test]
    fn reconstruction_matches_input_closely_on_band_limited_tone() {
        let signal = tone(0.05, 512);
        let set = vmd_decompose(&signal, &vmd_config(1)).unwrap();
        let rebuilt = reconstruct(&set);
        for (a, b) in rebuilt.iter().zip(&signal) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

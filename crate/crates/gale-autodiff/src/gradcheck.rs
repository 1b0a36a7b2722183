//! Finite-difference gradient checking.
//!
//! The check runs the forward pass only, so it is independent of the
//! reverse-mode code it validates: a closure maps a flat input vector to a
//! scalar loss, and each coordinate is perturbed symmetrically.

/// Central-difference gradient of `f` at `x` with half-step `step`.
pub fn central_diff<F>(mut f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Worst-case discrepancy between analytic and numeric gradients:
/// per element `|a - n| / max(|a|, |n|, 1)`, which is a relative error for
/// large gradients and an absolute error for gradients below one.
pub fn max_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Default half-step for `f64` central differences.
pub const DEFAULT_STEP: f64 = 1e-5;

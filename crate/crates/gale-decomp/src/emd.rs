use crate::{DecompError, Result};

/// Fraction threshold for the per-sift SD stopping criterion.
const SD_THRESHOLD: f64 = 0.2;

/// Extraction stops once the remainder's peak amplitude falls below this
/// fraction of the input's peak, so rounding dust left by an exact extraction
/// is not sifted into spurious components.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// Empirical mode decomposition of `signal` into intrinsic mode functions
/// plus a trend remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct EmdResult {
    pub imfs: Vec<Vec<f64>>,
    pub trend: Vec<f64>,
}

/// Sift `signal` into IMFs by repeated envelope-mean subtraction.
///
/// Each sift builds cubic-spline envelopes through the local maxima and
/// minima (endpoint extrema mirrored) and subtracts their mean; a component
/// is accepted once `sum((h_prev - h)^2) / sum(h_prev^2)` falls below 0.2 or
/// `max_siftings` passes have run. Extraction ends when the remainder has
/// fewer than two maxima or two minima, or its amplitude is negligible
/// relative to the input; that remainder is the trend.
pub fn emd_sift(signal: &[f64], max_siftings: usize) -> Result<EmdResult> {
    emd_sift_capped(signal, max_siftings, usize::MAX)
}

pub(crate) fn emd_sift_capped(
    signal: &[f64],
    max_siftings: usize,
    max_imfs: usize,
) -> Result<EmdResult> {
    if signal.len() < 4 {
        return Err(DecompError::SignalTooShort {
            len: signal.len(),
            min: 4,
        });
    }
    let peak = signal.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()));
    let mut remainder = signal.to_vec();
    let mut imfs = Vec::new();
    while imfs.len() < max_imfs {
        let rest = remainder.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()));
        if rest <= RESIDUAL_FLOOR * peak {
            break;
        }
        let (maxima, minima) = local_extrema(&remainder);
        if maxima.len() < 2 || minima.len() < 2 {
            break;
        }
        let imf = sift_one(&remainder, max_siftings);
        for (r, v) in remainder.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    Ok(EmdResult {
        imfs,
        trend: remainder,
    })
}

fn sift_one(component: &[f64], max_siftings: usize) -> Vec<f64> {
    let mut h = component.to_vec();
    for _ in 0..max_siftings {
        let (maxima, minima) = local_extrema(&h);
        if maxima.len() < 2 || minima.len() < 2 {
            break;
        }
        let upper = envelope(&h, &maxima);
        let lower = envelope(&h, &minima);
        let mut sd_num = 0.0;
        let mut sd_den = 0.0;
        for i in 0..h.len() {
            let mean = 0.5 * (upper[i] + lower[i]);
            sd_num += mean * mean;
            sd_den += h[i] * h[i];
            h[i] -= mean;
        }
        if sd_den == 0.0 || sd_num / sd_den < SD_THRESHOLD {
            break;
        }
    }
    h
}

/// Interior local maxima and minima. A flat run counts once, at its first
/// sample: a maximum needs a strict rise on the left and a non-rise on the
/// right (minima mirrored).
pub(crate) fn local_extrema(h: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..h.len().saturating_sub(1) {
        if h[i] > h[i - 1] && h[i] >= h[i + 1] {
            maxima.push(i);
        }
        if h[i] < h[i - 1] && h[i] <= h[i + 1] {
            minima.push(i);
        }
    }
    (maxima, minima)
}

/// Natural cubic spline through the extrema of `h`, with the two outermost
/// extrema on each side reflected across the series boundaries so the spline
/// covers the full index range without extrapolation.
fn envelope(h: &[f64], extrema: &[usize]) -> Vec<f64> {
    let n = h.len();
    let last = (n - 1) as f64;
    let m = extrema.len();
    let mut xs = Vec::with_capacity(m + 4);
    let mut ys = Vec::with_capacity(m + 4);
    xs.push(-(extrema[1] as f64));
    ys.push(h[extrema[1]]);
    xs.push(-(extrema[0] as f64));
    ys.push(h[extrema[0]]);
    for &i in extrema {
        xs.push(i as f64);
        ys.push(h[i]);
    }
    xs.push(2.0 * last - extrema[m - 1] as f64);
    ys.push(h[extrema[m - 1]]);
    xs.push(2.0 * last - extrema[m - 2] as f64);
    ys.push(h[extrema[m - 2]]);
    let spline = NaturalCubicSpline::fit(&xs, &ys);
    (0..n).map(|t| spline.eval(t as f64)).collect()
}

/// Interpolating natural cubic spline over strictly increasing knots.
struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second_derivs: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Solve the natural-boundary tridiagonal system for the knot second
    /// derivatives with the Thomas algorithm.
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let m = xs.len();
        let mut second = vec![0.0; m];
        if m > 2 {
            let gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let rows = m - 2;
            let mut diag = vec![0.0; rows];
            let mut rhs = vec![0.0; rows];
            for i in 0..rows {
                diag[i] = 2.0 * (gaps[i] + gaps[i + 1]);
                rhs[i] = 6.0
                    * ((ys[i + 2] - ys[i + 1]) / gaps[i + 1] - (ys[i + 1] - ys[i]) / gaps[i]);
            }
            for i in 1..rows {
                let w = gaps[i] / diag[i - 1];
                diag[i] -= w * gaps[i];
                rhs[i] -= w * rhs[i - 1];
            }
            second[rows] = rhs[rows - 1] / diag[rows - 1];
            for i in (0..rows - 1).rev() {
                second[i + 1] = (rhs[i] - gaps[i + 1] * second[i + 2]) / diag[i];
            }
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            second_derivs: second,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        let j = match self
            .xs
            .binary_search_by(|probe| probe.total_cmp(&x))
        {
            Ok(j) => j.min(m - 2),
            Err(j) => j.clamp(1, m - 1) - 1,
        };
        let (x0, x1) = (self.xs[j], self.xs[j + 1]);
        let (y0, y1) = (self.ys[j], self.ys[j + 1]);
        let (m0, m1) = (self.second_derivs[j], self.second_derivs[j + 1]);
        let gap = x1 - x0;
        let a = (x1 - x) / gap;
        let b = (x - x0) / gap;
        a * y0 + b * y1
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * gap * gap / 6.0
    }
}

use crate::config::{check_finite, DecompositionConfig};
use crate::modeset::ModeSet;
use crate::{DecompError, Result};

/// Multiple-seasonal decomposition by repeated cycle-subseries smoothing.
///
/// For each period, ascending, the series minus all other seasonal
/// components is smoothed along its cycle subseries with local linear loess;
/// a centered moving average over one period is subtracted so the seasonal
/// component carries no level or trend. The sweep repeats `iterations`
/// times, then the trend is a loess fit of the fully deseasonalized series.
/// Modes are the seasonal components (fastest period first is not guaranteed;
/// they follow the configured ascending period order) followed by the trend,
/// and the residual closes the sum exactly.
pub fn mstl_decompose(signal: &[f64], cfg: &DecompositionConfig) -> Result<ModeSet> {
    cfg.validate()?;
    check_finite(signal)?;
    let p = &cfg.mstl;
    let n = signal.len();
    if n < 4 {
        return Err(DecompError::SignalTooShort { len: n, min: 4 });
    }
    for &period in &p.periods {
        if n < 2 * period {
            return Err(DecompError::PeriodTooLong { period, len: n });
        }
    }

    let n_seasonal = p.periods.len();
    let mut seasonals = vec![vec![0.0; n]; n_seasonal];
    for _ in 0..p.iterations {
        for j in 0..n_seasonal {
            let mut work = signal.to_vec();
            for (i, seasonal) in seasonals.iter().enumerate() {
                if i != j {
                    for (w, s) in work.iter_mut().zip(seasonal) {
                        *w -= s;
                    }
                }
            }
            let period = p.periods[j];
            let window = p.loess_windows[j];
            let cycle = cycle_subseries_smooth(&work, period, window);
            let level = periodic_centered_ma(&cycle, period);
            for i in 0..n {
                seasonals[j][i] = cycle[i] - level[i];
            }
        }
    }

    let mut deseasonalized = signal.to_vec();
    for seasonal in &seasonals {
        for (d, s) in deseasonalized.iter_mut().zip(seasonal) {
            *d -= s;
        }
    }
    let max_period = *p.periods.last().expect("validated non-empty");
    let trend = loess(&deseasonalized, trend_window(max_period));

    let mut modes = seasonals;
    modes.push(trend);
    Ok(ModeSet::from_parts(modes, signal, None, cfg.clone()))
}

/// Smallest odd window of at least 1.5 periods, the usual trend span.
fn trend_window(max_period: usize) -> usize {
    let w = (3 * max_period).div_ceil(2);
    if w % 2 == 0 {
        w + 1
    } else {
        w
    }
}

/// Smooth each cycle subseries (every `period`-th sample, per phase) with
/// loess and scatter the fits back into place.
fn cycle_subseries_smooth(series: &[f64], period: usize, window: usize) -> Vec<f64> {
    let n = series.len();
    let mut out = vec![0.0; n];
    for phase in 0..period {
        let ys: Vec<f64> = series.iter().skip(phase).step_by(period).copied().collect();
        let smoothed = loess(&ys, window);
        for (k, v) in smoothed.into_iter().enumerate() {
            out[phase + k * period] = v;
        }
    }
    out
}

/// Centered moving average spanning one period, with the series extended
/// periodically at the boundaries. An even period uses the usual
/// `period + 1`-point form with half weight on the two outermost samples, so
/// an exactly periodic series averages to a constant everywhere.
fn periodic_centered_ma(series: &[f64], period: usize) -> Vec<f64> {
    let n = series.len();
    let p = period as f64;
    let half = period / 2;
    let wrapped = |idx: isize| -> f64 {
        let span = period as isize;
        let i = if idx < 0 {
            idx + span
        } else if idx >= n as isize {
            idx - span
        } else {
            idx
        };
        series[i as usize]
    };
    (0..n as isize)
        .map(|i| {
            if period % 2 == 1 {
                let sum: f64 = (-(half as isize)..=half as isize)
                    .map(|j| wrapped(i + j))
                    .sum();
                sum / p
            } else {
                let edges = 0.5 * (wrapped(i - half as isize) + wrapped(i + half as isize));
                let sum: f64 = (1 - half as isize..half as isize)
                    .map(|j| wrapped(i + j))
                    .sum();
                (sum + edges) / p
            }
        })
        .collect()
}

/// Local linear regression over the `window` nearest neighbors with tricube
/// weights, evaluated at every position of an equally spaced series.
fn loess(ys: &[f64], window: usize) -> Vec<f64> {
    let n = ys.len();
    let w = window.min(n);
    (0..n)
        .map(|i| {
            let lo = if n <= w {
                0
            } else {
                (i.saturating_sub(w / 2)).min(n - w)
            };
            let hi = lo + w;
            let dmax = (i - lo).max(hi - 1 - i) as f64;
            let mut sum_w = 0.0;
            let mut sum_x = 0.0;
            let mut sum_y = 0.0;
            let mut sum_xx = 0.0;
            let mut sum_xy = 0.0;
            for j in lo..hi {
                let x = j as f64 - i as f64;
                let weight = if dmax > 0.0 {
                    tricube(x.abs() / dmax)
                } else {
                    1.0
                };
                sum_w += weight;
                sum_x += weight * x;
                sum_y += weight * ys[j];
                sum_xx += weight * x * x;
                sum_xy += weight * x * ys[j];
            }
            let denom = sum_w * sum_xx - sum_x * sum_x;
            if denom.abs() > 1e-10 * sum_w.max(1.0) {
                (sum_xx * sum_y - sum_x * sum_xy) / denom
            } else {
                sum_y / sum_w
            }
        })
        .collect()
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u * u;
        v * v * v
    }
}

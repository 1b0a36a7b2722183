use crate::space::{ParamKind, ParamValue};
use crate::{Result, TpeError};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Density estimate for one parameter, fitted to the sampled values of one
/// side (good or bad) of the observation split.
#[derive(Debug, Clone)]
pub enum ParzenDensity {
    Continuous(ContinuousParzen),
    Int { inner: ContinuousParzen, lo: i64, hi: i64 },
    Categorical { choices: Vec<String>, probs: Vec<f64> },
}

/// Mixture of truncated Gaussians (one per sample) plus a uniform prior
/// component, over either the raw domain or its log transform.
#[derive(Debug, Clone)]
pub struct ContinuousParzen {
    z_lo: f64,
    z_hi: f64,
    log_space: bool,
    /// (mean, bandwidth) pairs in z-space, equally weighted.
    components: Vec<(f64, f64)>,
    /// Share of total mass carried by the uniform prior component.
    prior_frac: f64,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal is well formed")
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl ContinuousParzen {
    /// Fit over `[z_lo, z_hi]`; `zs` must already be transformed and inside.
    fn fit(zs: &[f64], z_lo: f64, z_hi: f64, log_space: bool, prior_weight: f64) -> Self {
        let width = z_hi - z_lo;
        let n = zs.len();
        let min_bw = width / (100.min(n + 1)) as f64;
        let mut components = Vec::with_capacity(n);
        for (i, &z) in zs.iter().enumerate() {
            // Bandwidth heuristic: distance to the nearest other sample,
            // clamped so lone or duplicated samples stay usable.
            let raw = zs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &o)| (o - z).abs())
                .fold(f64::INFINITY, f64::min);
            let bw = raw.clamp(min_bw, width);
            components.push((z, bw));
        }
        let prior_frac = prior_weight / (n as f64 + prior_weight);
        Self {
            z_lo,
            z_hi,
            log_space,
            components,
            prior_frac,
        }
    }

    fn width(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    /// Mixture density in z-space.
    fn pdf_z(&self, z: f64) -> f64 {
        if z < self.z_lo || z > self.z_hi {
            return 0.0;
        }
        let normal = standard_normal();
        let mut p = self.prior_frac / self.width();
        if !self.components.is_empty() {
            let w = (1.0 - self.prior_frac) / self.components.len() as f64;
            for &(mu, bw) in &self.components {
                let mass =
                    normal.cdf((self.z_hi - mu) / bw) - normal.cdf((self.z_lo - mu) / bw);
                p += w * norm_pdf((z - mu) / bw) / (bw * mass);
            }
        }
        p
    }

    /// Mixture CDF in z-space (used for integer mass integration).
    fn cdf_z(&self, z: f64) -> f64 {
        let z = z.clamp(self.z_lo, self.z_hi);
        let normal = standard_normal();
        let mut c = self.prior_frac * (z - self.z_lo) / self.width();
        if !self.components.is_empty() {
            let w = (1.0 - self.prior_frac) / self.components.len() as f64;
            for &(mu, bw) in &self.components {
                let lo = normal.cdf((self.z_lo - mu) / bw);
                let hi = normal.cdf((self.z_hi - mu) / bw);
                c += w * (normal.cdf((z - mu) / bw) - lo) / (hi - lo);
            }
        }
        c
    }

    /// Density in the parameter's own units (with the log-space Jacobian).
    fn pdf_x(&self, x: f64) -> f64 {
        if self.log_space {
            if x <= 0.0 {
                return 0.0;
            }
            self.pdf_z(x.ln()) / x
        } else {
            self.pdf_z(x)
        }
    }

    fn sample_z<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.components.is_empty() || rng.gen::<f64>() < self.prior_frac {
            return rng.gen_range(self.z_lo..self.z_hi);
        }
        let (mu, bw) = self.components[rng.gen_range(0..self.components.len())];
        let normal = standard_normal();
        let lo = normal.cdf((self.z_lo - mu) / bw);
        let hi = normal.cdf((self.z_hi - mu) / bw);
        let u = rng.gen_range(lo..hi);
        (mu + bw * normal.inverse_cdf(u)).clamp(self.z_lo, self.z_hi)
    }

    fn sample_x<R: Rng>(&self, rng: &mut R) -> f64 {
        let z = self.sample_z(rng);
        if self.log_space {
            z.exp()
        } else {
            z
        }
    }
}

/// Fit the Parzen estimator for one parameter from its sampled values.
pub fn parzen_density(
    name: &str,
    samples: &[ParamValue],
    kind: &ParamKind,
    prior_weight: f64,
) -> Result<ParzenDensity> {
    let bounds_err = |value: f64, lo: f64, hi: f64| TpeError::OutOfBoundsSample {
        name: name.to_string(),
        value,
        lo,
        hi,
    };
    match kind {
        ParamKind::Uniform { lo, hi } => {
            let mut zs = Vec::with_capacity(samples.len());
            for s in samples {
                let x = s.as_f64().ok_or_else(|| TpeError::WrongKind {
                    name: name.to_string(),
                    expected: "uniform".into(),
                })?;
                if x < *lo || x > *hi {
                    return Err(bounds_err(x, *lo, *hi));
                }
                zs.push(x);
            }
            Ok(ParzenDensity::Continuous(ContinuousParzen::fit(
                &zs,
                *lo,
                *hi,
                false,
                prior_weight,
            )))
        }
        ParamKind::LogUniform { lo, hi } => {
            let mut zs = Vec::with_capacity(samples.len());
            for s in samples {
                let x = s.as_f64().ok_or_else(|| TpeError::WrongKind {
                    name: name.to_string(),
                    expected: "log_uniform".into(),
                })?;
                if x < *lo || x > *hi {
                    return Err(bounds_err(x, *lo, *hi));
                }
                zs.push(x.ln());
            }
            Ok(ParzenDensity::Continuous(ContinuousParzen::fit(
                &zs,
                lo.ln(),
                hi.ln(),
                true,
                prior_weight,
            )))
        }
        ParamKind::IntUniform { lo, hi } => {
            let mut zs = Vec::with_capacity(samples.len());
            for s in samples {
                let x = s.as_i64().ok_or_else(|| TpeError::WrongKind {
                    name: name.to_string(),
                    expected: "int_uniform".into(),
                })?;
                if x < *lo || x > *hi {
                    return Err(bounds_err(x as f64, *lo as f64, *hi as f64));
                }
                zs.push(x as f64);
            }
            // Treat integers as midpoints of unit cells on a widened domain.
            let inner = ContinuousParzen::fit(
                &zs,
                *lo as f64 - 0.5,
                *hi as f64 + 0.5,
                false,
                prior_weight,
            );
            Ok(ParzenDensity::Int {
                inner,
                lo: *lo,
                hi: *hi,
            })
        }
        ParamKind::Categorical { choices } => {
            let mut counts = vec![0.0f64; choices.len()];
            for s in samples {
                let c = s.as_str().ok_or_else(|| TpeError::WrongKind {
                    name: name.to_string(),
                    expected: "categorical".into(),
                })?;
                let idx = choices.iter().position(|x| x == c).ok_or_else(|| {
                    TpeError::UnknownChoice {
                        name: name.to_string(),
                        value: c.to_string(),
                    }
                })?;
                counts[idx] += 1.0;
            }
            let total = samples.len() as f64 + prior_weight * choices.len() as f64;
            let probs = counts
                .iter()
                .map(|c| (c + prior_weight) / total)
                .collect();
            Ok(ParzenDensity::Categorical {
                choices: choices.clone(),
                probs,
            })
        }
    }
}

impl ParzenDensity {
    /// Log density (or log mass) of a value; `-inf` outside the domain.
    pub fn log_density(&self, value: &ParamValue) -> f64 {
        match self {
            ParzenDensity::Continuous(c) => match value.as_f64() {
                Some(x) => c.pdf_x(x).ln(),
                None => f64::NEG_INFINITY,
            },
            ParzenDensity::Int { inner, lo, hi } => match value.as_i64() {
                Some(k) if k >= *lo && k <= *hi => {
                    let k = k as f64;
                    (inner.cdf_z(k + 0.5) - inner.cdf_z(k - 0.5)).ln()
                }
                _ => f64::NEG_INFINITY,
            },
            ParzenDensity::Categorical { choices, probs } => match value.as_str() {
                Some(c) => choices
                    .iter()
                    .position(|x| x == c)
                    .map(|i| probs[i].ln())
                    .unwrap_or(f64::NEG_INFINITY),
                None => f64::NEG_INFINITY,
            },
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParzenDensity::Continuous(c) => ParamValue::Float(c.sample_x(rng)),
            ParzenDensity::Int { inner, lo, hi } => {
                let z = inner.sample_z(rng);
                ParamValue::Int((z.round() as i64).clamp(*lo, *hi))
            }
            ParzenDensity::Categorical { choices, probs } => {
                let mut r = rng.gen::<f64>();
                for (c, p) in choices.iter().zip(probs) {
                    if r < *p {
                        return ParamValue::Choice(c.clone());
                    }
                    r -= p;
                }
                ParamValue::Choice(choices.last().expect("nonempty domain").clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_samples_give_uniform_prior() {
        let kind = ParamKind::Uniform { lo: 2.0, hi: 6.0 };
        let d = parzen_density("x", &[], &kind, 1.0).unwrap();
        for i in 0..50 {
            let x = 2.0 + 4.0 * i as f64 / 49.0;
            let p = d.log_density(&ParamValue::Float(x)).exp();
            assert!((p - 0.25).abs() < 1e-12, "p({x}) = {p}");
        }
    }

    #[test]
    fn single_sample_peaks_at_itself() {
        let kind = ParamKind::Uniform { lo: 0.0, hi: 10.0 };
        let d = parzen_density("x", &[ParamValue::Float(5.0)], &kind, 1.0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let best = grid
            .iter()
            .cloned()
            .max_by(|a, b| {
                d.log_density(&ParamValue::Float(*a))
                    .total_cmp(&d.log_density(&ParamValue::Float(*b)))
            })
            .unwrap();
        assert!((best - 5.0).abs() < 1e-9, "mode at {best}");
    }

    #[test]
    fn categorical_counts_smooth_to_expected_mass() {
        let kind = ParamKind::Categorical {
            choices: vec!["a".into(), "b".into()],
        };
        let samples = vec![
            ParamValue::Choice("a".into()),
            ParamValue::Choice("a".into()),
            ParamValue::Choice("a".into()),
            ParamValue::Choice("b".into()),
        ];
        let d = parzen_density("c", &samples, &kind, 1.0).unwrap();
        let pa = d.log_density(&ParamValue::Choice("a".into())).exp();
        let pb = d.log_density(&ParamValue::Choice("b".into())).exp();
        assert!((pa - 4.0 / 6.0).abs() < 1e-12);
        assert!((pb - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn int_masses_sum_to_one() {
        let kind = ParamKind::IntUniform { lo: 1, hi: 6 };
        let samples = vec![ParamValue::Int(2), ParamValue::Int(2), ParamValue::Int(5)];
        let d = parzen_density("n", &samples, &kind, 1.0).unwrap();
        let total: f64 = (1..=6)
            .map(|k| d.log_density(&ParamValue::Int(k)).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "total {total}");
        let p2 = d.log_density(&ParamValue::Int(2)).exp();
        let p4 = d.log_density(&ParamValue::Int(4)).exp();
        assert!(p2 > p4);
    }

    #[test]
    fn out_of_bounds_sample_is_rejected() {
        let kind = ParamKind::Uniform { lo: 0.0, hi: 1.0 };
        assert!(matches!(
            parzen_density("x", &[ParamValue::Float(2.0)], &kind, 1.0),
            Err(TpeError::OutOfBoundsSample { .. })
        ));
    }

    #[test]
    fn log_space_fit_concentrates_in_log_units() {
        let kind = ParamKind::LogUniform { lo: 1e-3, hi: 1e3 };
        let samples: Vec<ParamValue> = [0.009, 0.01, 0.012]
            .iter()
            .map(|v| ParamValue::Float(*v))
            .collect();
        let d = parzen_density("r", &samples, &kind, 1.0).unwrap();
        let near = d.log_density(&ParamValue::Float(0.01));
        let far = d.log_density(&ParamValue::Float(100.0));
        assert!(near > far + 2.0, "near {near}, far {far}");
    }

    #[test]
    fn samples_respect_bounds_for_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cont = parzen_density(
            "x",
            &[ParamValue::Float(0.2), ParamValue::Float(0.9)],
            &ParamKind::Uniform { lo: 0.0, hi: 1.0 },
            1.0,
        )
        .unwrap();
        let log = parzen_density(
            "r",
            &[ParamValue::Float(0.5)],
            &ParamKind::LogUniform { lo: 1e-2, hi: 1e2 },
            1.0,
        )
        .unwrap();
        let int = parzen_density(
            "n",
            &[ParamValue::Int(3)],
            &ParamKind::IntUniform { lo: 1, hi: 5 },
            1.0,
        )
        .unwrap();
        for _ in 0..500 {
            match cont.sample(&mut rng) {
                ParamValue::Float(x) => assert!((0.0..=1.0).contains(&x)),
                other => panic!("unexpected {other:?}"),
            }
            match log.sample(&mut rng) {
                ParamValue::Float(x) => assert!((1e-2..=1e2 + 1e-9).contains(&x)),
                other => panic!("unexpected {other:?}"),
            }
            match int.sample(&mut rng) {
                ParamValue::Int(k) => assert!((1..=5).contains(&k)),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}

use crate::parzen::parzen_density;
use crate::space::{sample_random, Config, SearchSpace};
use crate::{Result, TpeError};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One completed trial: the evaluated config and its loss (an nMAE fraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub config: Config,
    pub loss: f64,
}

/// Estimator settings. The defaults follow common practice: the lowest
/// quarter of trials counts as good, 24 candidates are drawn per suggestion,
/// and the prior carries the weight of one pseudo-observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    pub gamma: f64,
    pub n_ei_candidates: usize,
    pub prior_weight: f64,
    pub seed: u64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_ei_candidates: 24,
            prior_weight: 1.0,
            seed: 0,
        }
    }
}

/// Partition trials into the `ceil(gamma * n)` lowest-loss observations and
/// the rest. The sort is stable, so equal losses keep insertion order.
pub fn split_observations(
    obs: &[Observation],
    gamma: f64,
) -> Result<(Vec<Observation>, Vec<Observation>)> {
    if obs.is_empty() {
        return Err(TpeError::EmptyObservations);
    }
    let n_good = ((gamma * obs.len() as f64).ceil() as usize).clamp(1, obs.len());
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| obs[a].loss.total_cmp(&obs[b].loss));
    let good = order[..n_good].iter().map(|&i| obs[i].clone()).collect();
    let bad = order[n_good..].iter().map(|&i| obs[i].clone()).collect();
    Ok((good, bad))
}

/// Propose the next config: with fewer than two trials fall back to the
/// prior, otherwise draw candidates from the good-side density of each
/// parameter and keep the candidate with the highest log density ratio
/// against the bad side.
pub fn suggest<R: Rng>(
    space: &SearchSpace,
    obs: &[Observation],
    cfg: &TpeConfig,
    rng: &mut R,
) -> Result<Config> {
    let usable: Vec<Observation> = obs.iter().filter(|o| o.loss.is_finite()).cloned().collect();
    if usable.len() < 2 {
        return Ok(sample_random(space, rng));
    }
    let (good, bad) = split_observations(&usable, cfg.gamma)?;
    let mut config = Config::new();
    for spec in space.params() {
        let collect = |side: &[Observation]| -> Vec<_> {
            side.iter()
                .filter_map(|o| o.config.get(&spec.name).cloned())
                .collect()
        };
        let l = parzen_density(&spec.name, &collect(&good), &spec.kind, cfg.prior_weight)?;
        let g = parzen_density(&spec.name, &collect(&bad), &spec.kind, cfg.prior_weight)?;
        let mut best: Option<(f64, crate::ParamValue)> = None;
        for _ in 0..cfg.n_ei_candidates.max(1) {
            let cand = l.sample(rng);
            // Log-space ratio; a bad-side underflow gives +inf and wins.
            let score = l.log_density(&cand) - g.log_density(&cand);
            let better = match &best {
                None => true,
                Some((s, _)) => score > *s,
            };
            if better {
                best = Some((score, cand));
            }
        }
        config.insert(spec.name.clone(), best.expect("candidate loop ran").1);
    }
    space.validate_config(&config)?;
    Ok(config)
}

//! Seeded optimization benchmark on a 1-D quadratic: the estimator must beat
//! pure random search on the same budget and land near the optimum.

use gale_tpe::{
    sample_random, suggest, Config, Observation, ParamKind, ParamSpec, SearchSpace, TpeConfig,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BUDGET: usize = 100;

fn quadratic_space() -> SearchSpace {
    SearchSpace::new(vec![ParamSpec {
        name: "x".into(),
        kind: ParamKind::Uniform { lo: 0.0, hi: 10.0 },
    }])
    .unwrap()
}

fn loss(config: &Config) -> f64 {
    let x = config["x"].as_f64().unwrap();
    (x - 3.0).powi(2)
}

fn run_tpe(seed: u64) -> (f64, f64) {
    let space = quadratic_space();
    let cfg = TpeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs: Vec<Observation> = Vec::new();
    for _ in 0..BUDGET {
        let config = suggest(&space, &obs, &cfg, &mut rng).unwrap();
        let l = loss(&config);
        obs.push(Observation { config, loss: l });
    }
    let best = obs
        .iter()
        .min_by(|a, b| a.loss.total_cmp(&b.loss))
        .unwrap();
    (best.loss, best.config["x"].as_f64().unwrap())
}

fn run_random(seed: u64) -> f64 {
    let space = quadratic_space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..BUDGET)
        .map(|_| loss(&sample_random(&space, &mut rng)))
        .fold(f64::INFINITY, f64::min)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

#[test]
fn beats_random_search_and_finds_the_optimum() {
    let seeds: Vec<u64> = (0..10).collect();
    let tpe: Vec<(f64, f64)> = seeds.iter().map(|&s| run_tpe(s)).collect();
    let random: Vec<f64> = seeds.iter().map(|&s| run_random(s)).collect();

    let tpe_median = median(tpe.iter().map(|(l, _)| *l).collect());
    let random_median = median(random);
    assert!(
        tpe_median < random_median,
        "median best loss {tpe_median} not below random search {random_median}"
    );

    for (l, x) in &tpe {
        assert!(
            (x - 3.0).abs() < 0.5,
            "best x {x} (loss {l}) strayed from the optimum"
        );
    }
}

#[test]
fn suggestions_stay_in_bounds_on_a_mixed_space() {
    let space = SearchSpace::new(vec![
        ParamSpec {
            name: "alpha".into(),
            kind: ParamKind::LogUniform { lo: 1.0, hi: 1e4 },
        },
        ParamSpec {
            name: "k".into(),
            kind: ParamKind::IntUniform { lo: 2, hi: 12 },
        },
        ParamSpec {
            name: "tau".into(),
            kind: ParamKind::Categorical {
                choices: vec!["0".into(), "0.1".into(), "1.0".into()],
            },
        },
    ])
    .unwrap();
    let cfg = TpeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut obs: Vec<Observation> = Vec::new();
    for step in 0..60 {
        let config = suggest(&space, &obs, &cfg, &mut rng).unwrap();
        space.validate_config(&config).unwrap();
        // Synthetic loss: prefer small alpha, k near 5, tau "0.1".
        let a = config["alpha"].as_f64().unwrap();
        let k = config["k"].as_i64().unwrap() as f64;
        let t = match config["tau"].as_str().unwrap() {
            "0.1" => 0.0,
            _ => 0.5,
        };
        let l = a.ln() / 10.0 + (k - 5.0).abs() / 10.0 + t + step as f64 * 0.0;
        obs.push(Observation { config, loss: l });
    }
    let best = obs.iter().min_by(|x, y| x.loss.total_cmp(&y.loss)).unwrap();
    assert!(best.config["alpha"].as_f64().unwrap() < 1e3);
}

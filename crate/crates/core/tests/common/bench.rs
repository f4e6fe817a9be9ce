//! Synthetic quadratic benchmark for the Bayesian optimizer, with random
//! search and a random reference sample as baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wearcnn::hpo::{run_hpo, BayesOpt, Config, Dimension, Domain, SearchSpace};

pub const OPTIMUM: [f64; 2] = [0.3, -0.4];
pub const TRIALS: usize = 30;

pub fn square() -> SearchSpace {
    let d = |name: &str| Dimension {
        name: name.into(),
        domain: Domain::Uniform { low: -1.0, high: 1.0 },
    };
    SearchSpace::new(vec![d("x"), d("y")]).unwrap()
}

pub fn point(c: &Config) -> [f64; 2] {
    [c["x"].as_f64().unwrap(), c["y"].as_f64().unwrap()]
}

/// Negative squared distance to [`OPTIMUM`]; maximal (zero) at the optimum.
pub fn quadratic(p: [f64; 2]) -> f64 {
    -((p[0] - OPTIMUM[0]).powi(2) + (p[1] - OPTIMUM[1]).powi(2))
}

fn uniform_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]
}

/// Objective values of the suggestions, in order.
pub fn bayes_trace(seed: u64) -> Vec<(f64, [f64; 2])> {
    let outcome = run_hpo(&BayesOpt::new(square(), seed), TRIALS, |c| Ok(quadratic(point(c))), |_| Ok(())).unwrap();
    outcome.history.trials.iter().map(|t| (t.objective(), point(&t.config))).collect()
}

/// Median over `replicates` independent random searches of their best value.
pub fn random_search_median(seed: u64, replicates: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_7a11);
    let mut bests: Vec<f64> = (0..replicates)
        .map(|_| (0..TRIALS).map(|_| quadratic(uniform_point(&mut rng))).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    bests.sort_by(f64::total_cmp);
    bests[replicates / 2]
}

/// Objective value that 95 % of a 10,000-point uniform sample falls below.
pub fn top5_threshold(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e7e_2e4e);
    let mut values: Vec<f64> = (0..10_000).map(|_| quadratic(uniform_point(&mut rng))).collect();
    values.sort_by(f64::total_cmp);
    values[9_500]
}

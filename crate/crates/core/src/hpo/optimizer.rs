use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::{expected_improvement, GaussianProcess};
use super::space::{Config, SearchSpace};
use crate::error::{Error, Result};
use crate::seed::{indexed, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialStatus {
    Complete { objective: f64 },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub config: Config,
    #[serde(flatten)]
    pub status: TrialStatus,
}

impl Trial {
    /// Validation accuracy, or −∞ for a failed trial.
    pub fn objective(&self) -> f64 {
        match self.status {
            TrialStatus::Complete { objective } => objective,
            TrialStatus::Failed { .. } => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub trials: Vec<Trial>,
}

impl History {
    pub fn observe(&mut self, trial: Trial) {
        self.trials.push(trial);
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Trial with the highest objective; the earliest wins ties.
    pub fn incumbent(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .filter(|t| t.objective() > f64::NEG_INFINITY)
            .fold(None, |best: Option<&Trial>, t| match best {
                Some(b) if b.objective() >= t.objective() => Some(b),
                _ => Some(t),
            })
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for t in &self.trials {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n").map_err(|e| Error::io("<history>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut trials = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::io("<history>", e))?;
            if !line.trim().is_empty() {
                trials.push(serde_json::from_str(&line)?);
            }
        }
        Ok(History { trials })
    }
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 2u64;
    while out.len() < n {
        if out.iter().all(|p| !k.is_multiple_of(*p)) {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Sequential model-based optimisation: quasi-random start, then a GP
/// surrogate and expected improvement.
#[derive(Debug, Clone)]
pub struct BayesOpt {
    pub space: SearchSpace,
    pub seed: u64,
    /// Number of space-filling suggestions before the surrogate takes over.
    pub initial: usize,
    pub candidates: usize,
    pub jitter: f64,
    pub restarts: usize,
}

impl BayesOpt {
    pub fn new(space: SearchSpace, seed: u64) -> Self {
        BayesOpt {
            space,
            seed,
            initial: 10,
            candidates: 2048,
            jitter: 1e-8,
            restarts: 4,
        }
    }

    /// Halton point `i` (skipping the origin) under a seeded random shift modulo 1.
    fn space_filling(&self, i: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(self.seed, "halton-shift"));
        primes(self.space.len())
            .into_iter()
            .map(|b| (radical_inverse(i as u64 + 1, b) + rng.gen::<f64>()).fract())
            .collect()
    }

    /// Next configuration to evaluate given everything observed so far.
    pub fn suggest(&self, history: &History) -> Result<Config> {
        let n = history.len();
        let finite: Vec<&Trial> = history.trials.iter().filter(|t| t.objective().is_finite()).collect();
        if n < self.initial || finite.len() < 2 {
            return Ok(self.space.decode(&self.space_filling(n)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(indexed(substream(self.seed, "suggest"), n as u64));
        let worst = finite.iter().map(|t| t.objective()).fold(f64::INFINITY, f64::min);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for t in &history.trials {
            x.push(self.space.encode(&t.config)?);
            // failed trials count as the worst observed outcome
            y.push(if t.objective().is_finite() { t.objective() } else { worst });
        }
        let incumbent = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gp = GaussianProcess::fit(x, &y, self.jitter, self.restarts, &mut rng)?;
        let mut best: Option<(f64, Config)> = None;
        for _ in 0..self.candidates {
            let unit: Vec<f64> = (0..self.space.len()).map(|_| rng.gen()).collect();
            let config = self.space.decode(&unit);
            let (mean, var) = gp.predict(&self.space.encode(&config)?);
            let ei = expected_improvement(mean, var, incumbent);
            if best.as_ref().is_none_or(|(b, _)| ei > *b) {
                best = Some((ei, config));
            }
        }
        Ok(best.expect("at least one candidate").1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpoOutcome {
    pub best: Option<Trial>,
    pub history: History,
}

/// Evaluates `budget` suggested configurations with `objective`; errors
/// returned by the objective mark the trial as failed.
pub fn run_hpo(
    optimizer: &BayesOpt,
    budget: usize,
    mut objective: impl FnMut(&Config) -> Result<f64>,
    mut on_trial: impl FnMut(&Trial) -> Result<()>,
) -> Result<HpoOutcome> {
    let mut history = History::default();
    for index in 0..budget {
        let config = optimizer.suggest(&history)?;
        let status = match objective(&config) {
            Ok(v) if v.is_finite() => TrialStatus::Complete { objective: v },
            Ok(v) => TrialStatus::Failed { message: format!("objective {v} is not finite") },
            Err(e) => TrialStatus::Failed { message: e.to_string() },
        };
        let trial = Trial { index, config, status };
        on_trial(&trial)?;
        history.observe(trial);
    }
    Ok(HpoOutcome {
        best: history.incumbent().cloned(),
        history,
    })
}

use serde::{Deserialize, Serialize};

use super::tdist::t_critical;
use crate::error::{Error, Result};

/// Test accuracies (fractions) of repeated runs of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAccuracies {
    pub label: String,
    pub samples: Vec<f64>,
}

impl RunAccuracies {
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Self {
        RunAccuracies { label: label.into(), samples }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn moments(&self) -> Result<Moments> {
        Moments::of(&self.samples)
    }
}

/// Mean, sample standard deviation (N − 1) and size of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Moments {
    pub fn of(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        if samples.iter().all(|&v| v == samples[0]) {
            return Ok(Moments { mean: samples[0], sd: 0.0, n });
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(Moments {
            mean,
            sd: (ss / (n - 1) as f64).sqrt(),
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Half-width of the two-sided 95 % t interval of the mean.
    pub ci95_half_width: f64,
    pub min: f64,
    pub q1: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (`(n − 1)·p` positions).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(samples: &[f64]) -> Result<DescriptiveStats> {
    let m = Moments::of(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t = t_critical(0.025, (m.n - 1) as f64)?;
    Ok(DescriptiveStats {
        n: m.n,
        mean: m.mean,
        median: quantile_sorted(&sorted, 0.5),
        sd: m.sd,
        ci95_half_width: t * m.sd / (m.n as f64).sqrt(),
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[m.n - 1],
    })
}

//! Gaussian-process regression with a squared-exponential ARD kernel.

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};

const LOG_LENGTH_BOUNDS: (f64, f64) = (-4.6, 2.3);
const LOG_SIGNAL_BOUNDS: (f64, f64) = (-2.3, 2.3);

/// Kernel hyperparameters in log space: one length scale per input
/// dimension followed by the signal standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub log_lengths: Vec<f64>,
    pub log_signal: f64,
}

impl KernelParams {
    fn from_slice(v: &[f64]) -> Self {
        KernelParams {
            log_lengths: v[..v.len() - 1].to_vec(),
            log_signal: v[v.len() - 1],
        }
    }

    fn in_bounds(&self) -> bool {
        let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        self.log_lengths.iter().all(|&l| inside(l, LOG_LENGTH_BOUNDS)) && inside(self.log_signal, LOG_SIGNAL_BOUNDS)
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.log_lengths)
            .map(|((x, y), l)| ((x - y) / l.exp()).powi(2))
            .sum();
        (2.0 * self.log_signal).exp() * (-0.5 * r2).exp()
    }
}

fn gram(x: &[Vec<f64>], p: &KernelParams, jitter: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| p.kernel(&x[i], &x[j]) + if i == j { jitter } else { 0.0 })
}

/// Log marginal likelihood of standardized targets `y`.
fn log_marginal_likelihood(x: &[Vec<f64>], y: &DVector<f64>, p: &KernelParams, jitter: f64) -> Option<f64> {
    let chol = Cholesky::new(gram(x, p, jitter))?;
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let n = y.len() as f64;
    Some(-0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

struct NegLml<'a> {
    x: &'a [Vec<f64>],
    y: &'a DVector<f64>,
    jitter: f64,
}

impl CostFunction for NegLml<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, v: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let p = KernelParams::from_slice(v);
        if !p.in_bounds() {
            return Ok(f64::INFINITY);
        }
        Ok(log_marginal_likelihood(self.x, self.y, &p, self.jitter).map_or(f64::INFINITY, |l| -l))
    }
}

/// Posterior of a zero-mean GP fitted to standardized targets.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    pub params: KernelParams,
    x: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl GaussianProcess {
    /// Fits with fixed kernel hyperparameters.
    pub fn with_params(x: Vec<Vec<f64>>, y: &[f64], params: KernelParams, jitter: f64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidArgument(format!("{} inputs for {} targets", x.len(), y.len())));
        }
        let (y_mean, y_scale, ys) = standardize(y);
        let chol = Cholesky::new(gram(&x, &params, jitter))
            .ok_or_else(|| Error::InvalidArgument("kernel matrix is not positive definite".into()))?;
        let alpha = chol.solve(&ys);
        Ok(GaussianProcess { params, x, chol, alpha, y_mean, y_scale })
    }

    /// Fits kernel hyperparameters by maximizing the log marginal
    /// likelihood with Nelder–Mead from `restarts` random starting points
    /// plus one default start.
    pub fn fit<R: Rng>(x: Vec<Vec<f64>>, y: &[f64], jitter: f64, restarts: usize, rng: &mut R) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidArgument(format!("{} inputs for {} targets", x.len(), y.len())));
        }
        let d = x[0].len();
        let (_, _, ys) = standardize(y);
        let mut starts = vec![vec![(0.3f64).ln(); d + 1]];
        starts[0][d] = 0.0;
        for _ in 0..restarts {
            let mut s: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.5..1.0)).collect();
            s.push(rng.gen_range(-0.5..0.5));
            starts.push(s);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in starts {
            let simplex: Vec<Vec<f64>> = std::iter::once(start.clone())
                .chain((0..=d).map(|i| {
                    let mut v = start.clone();
                    v[i] += 0.5;
                    v
                }))
                .collect();
            let cost = NegLml { x: &x, y: &ys, jitter };
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-6)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let result = Executor::new(cost, solver)
                .configure(|s| s.max_iters(60 * (d as u64 + 1)))
                .run()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let state = result.state();
            if let Some(p) = &state.best_param {
                if state.best_cost.is_finite() && best.as_ref().is_none_or(|(c, _)| state.best_cost < *c) {
                    best = Some((state.best_cost, p.clone()));
                }
            }
        }
        let params = best.map_or_else(
            || KernelParams { log_lengths: vec![(0.3f64).ln(); d], log_signal: 0.0 },
            |(_, v)| KernelParams::from_slice(&v),
        );
        GaussianProcess::with_params(x, y, params, jitter)
    }

    /// Posterior mean and variance at `q`, in target units.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| self.params.kernel(xi, q)));
        let mean = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular factor is invertible");
        let var = (self.params.kernel(q, q) - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * self.y_scale * var)
    }
}

fn standardize(y: &[f64]) -> (f64, f64, DVector<f64>) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (mean, scale, DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / scale)))
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement over `incumbent` for maximization.
pub fn expected_improvement(mean: f64, variance: f64, incumbent: f64) -> f64 {
    let sd = variance.max(0.0).sqrt();
    let gain = mean - incumbent;
    if sd < 1e-12 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    (gain * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

//! Batch normalization over the last axis.
//!
//! Train mode normalizes with the biased batch variance and reports updated
//! running statistics (`running = momentum·running + (1 − momentum)·batch`)
//! instead of mutating the parameters; the caller decides when to commit them.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl<T: Scalar> BatchNormParams<T> {
    pub fn new(features: usize) -> Self {
        BatchNormParams {
            gamma: Tensor::full(vec![features], T::one()),
            beta: Tensor::zeros(vec![features]),
            running_mean: Tensor::zeros(vec![features]),
            running_var: Tensor::full(vec![features], T::one()),
            momentum: 0.9,
            epsilon: 1e-3,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }
}

/// Quantities the vjp needs from the forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub mode: Mode,
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct BatchNormOutput<T> {
    pub y: Tensor<T>,
    pub cache: BatchNormCache<T>,
    /// `(running_mean, running_var)` after this batch; train mode only.
    pub running: Option<(Tensor<T>, Tensor<T>)>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads<T> {
    pub x: Tensor<T>,
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

pub fn batchnorm<T: Scalar>(x: &Tensor<T>, p: &BatchNormParams<T>, mode: Mode) -> Result<BatchNormOutput<T>> {
    let f = p.features();
    let (rows, cols) = x.rows_cols();
    if cols != f || x.rank() < 2 {
        return Err(Error::shape("batchnorm", "feature dim must match parameters", x.shape(), p.gamma.shape()));
    }
    let eps = T::of(p.epsilon);
    let xd = x.data();
    let (mean, var) = match mode {
        Mode::Train => {
            if rows < 2 {
                return Err(Error::InvalidArgument(format!(
                    "batchnorm needs a batch of at least 2 in train mode, got {rows}"
                )));
            }
            let n = T::of(rows as f64);
            let mut mean = vec![T::zero(); f];
            for row in xd.chunks(f) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![T::zero(); f];
            for row in xd.chunks(f) {
                for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= n);
            (mean, var)
        }
        Mode::Infer => (p.running_mean.data().to_vec(), p.running_var.data().to_vec()),
    };
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut x_hat = Vec::with_capacity(xd.len());
    let mut y = Vec::with_capacity(xd.len());
    for row in xd.chunks(f) {
        for j in 0..f {
            let h = (row[j] - mean[j]) * inv_std[j];
            x_hat.push(h);
            y.push(p.gamma.data()[j] * h + p.beta.data()[j]);
        }
    }
    let running = (mode == Mode::Train).then(|| {
        let mom = T::of(p.momentum);
        let keep = T::one() - mom;
        let rm = p.running_mean.data().iter().zip(&mean).map(|(&r, &b)| mom * r + keep * b).collect();
        let rv = p.running_var.data().iter().zip(&var).map(|(&r, &b)| mom * r + keep * b).collect();
        (Tensor { shape: vec![f], data: rm }, Tensor { shape: vec![f], data: rv })
    });
    Ok(BatchNormOutput {
        y: Tensor::new(x.shape().to_vec(), y)?,
        cache: BatchNormCache {
            mode,
            x_hat: Tensor::new(x.shape().to_vec(), x_hat)?,
            inv_std,
        },
        running,
    })
}

pub fn batchnorm_vjp<T: Scalar>(
    cache: &BatchNormCache<T>,
    p: &BatchNormParams<T>,
    upstream: &Tensor<T>,
) -> Result<BatchNormGrads<T>> {
    upstream.ensure_same_shape(&cache.x_hat, "batchnorm_vjp")?;
    let f = p.features();
    let (rows, _) = upstream.rows_cols();
    let g = upstream.data();
    let xh = cache.x_hat.data();
    let mut dgamma = vec![T::zero(); f];
    let mut dbeta = vec![T::zero(); f];
    for (grow, hrow) in g.chunks(f).zip(xh.chunks(f)) {
        for j in 0..f {
            dgamma[j] += grow[j] * hrow[j];
            dbeta[j] += grow[j];
        }
    }
    let gamma = p.gamma.data();
    let mut dx = Vec::with_capacity(g.len());
    match cache.mode {
        Mode::Train => {
            let n = T::of(rows as f64);
            for (grow, hrow) in g.chunks(f).zip(xh.chunks(f)) {
                for j in 0..f {
                    let scale = gamma[j] * cache.inv_std[j] / n;
                    dx.push(scale * (n * grow[j] - dbeta[j] - hrow[j] * dgamma[j]));
                }
            }
        }
        Mode::Infer => {
            for grow in g.chunks(f) {
                for j in 0..f {
                    dx.push(grow[j] * gamma[j] * cache.inv_std[j]);
                }
            }
        }
    }
    Ok(BatchNormGrads {
        x: Tensor::new(upstream.shape().to_vec(), dx)?,
        gamma: Tensor::new(vec![f], dgamma)?,
        beta: Tensor::new(vec![f], dbeta)?,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ParamStore;
use crate::tensor::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for every trainable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: ParamStore<T>,
    pub v: ParamStore<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        AdamState {
            m: params.zeros_like_trainable(),
            v: params.zeros_like_trainable(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
/// Nothing is modified if any gradient entry is non-finite.
pub fn adam_step<T: Scalar>(
    params: &mut ParamStore<T>,
    grads: &ParamStore<T>,
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<()> {
    for g in grads.iter() {
        let bad = g.tensor.data().iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFinite {
                param: g.name.clone(),
                count: bad,
            });
        }
        let p = params
            .get(&g.name)
            .ok_or_else(|| Error::InvalidArgument(format!("gradient for unknown parameter {}", g.name)))?;
        if p.shape() != g.tensor.shape() {
            return Err(Error::shape("adam_step", &g.name, p.shape(), g.tensor.shape()));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(config.beta1), T::of(config.beta2));
    let one = T::one();
    let c1 = T::of(1.0 - config.beta1.powi(t));
    let c2 = T::of(1.0 - config.beta2.powi(t));
    let lr = T::of(config.learning_rate);
    let eps = T::of(config.epsilon);
    for g in grads.iter() {
        let m = state.m.get_mut(&g.name).expect("moments track trainable params");
        for (m, &g) in m.data_mut().iter_mut().zip(g.tensor.data()) {
            *m = b1 * *m + (one - b1) * g;
        }
        let v = state.v.get_mut(&g.name).expect("moments track trainable params");
        for (v, &g) in v.data_mut().iter_mut().zip(g.tensor.data()) {
            *v = b2 * *v + (one - b2) * g * g;
        }
        let (m, v) = (state.m.get(&g.name).unwrap(), state.v.get(&g.name).unwrap());
        let w = params.get_mut(&g.name).expect("checked above");
        for ((w, &m), &v) in w.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
            *w -= lr * (m / c1) / ((v / c2).sqrt() + eps);
        }
    }
    Ok(())
}

use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `upstream` where `x > 0`, zero elsewhere (including `x == 0`).
pub fn relu_vjp<T: Scalar>(x: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    x.ensure_same_shape(upstream, "relu_vjp")?;
    let data = x
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Softmax along the last axis, shifted by the row maximum.
pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (_, cols) = x.rows_cols();
    let mut out = Vec::with_capacity(x.len());
    for row in x.data().chunks(cols.max(1)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        let mut total = T::zero();
        for &v in row {
            let e = (v - max).exp();
            total += e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|e| *e /= total);
    }
    Tensor::new(x.shape().to_vec(), out).expect("shape preserved")
}

/// vjp of [`softmax`] given its output `y`: `y ⊙ (g − Σ g⊙y)` per row.
pub fn softmax_vjp<T: Scalar>(y: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    y.ensure_same_shape(upstream, "softmax_vjp")?;
    let (_, cols) = y.rows_cols();
    let mut out = Vec::with_capacity(y.len());
    for (yr, gr) in y.data().chunks(cols).zip(upstream.data().chunks(cols)) {
        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
        out.extend(yr.iter().zip(gr).map(|(&a, &b)| a * (b - dot)));
    }
    Tensor::new(y.shape().to_vec(), out)
}

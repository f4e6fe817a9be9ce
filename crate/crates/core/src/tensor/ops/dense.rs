use crate::error::{Error, Result};
use crate::tensor::{gemm, Scalar, Tensor, Trans};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    /// `(in_dim, out_dim)`.
    pub weights: Tensor<T>,
    /// `(out_dim)`.
    pub bias: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub x: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> DenseParams<T> {
    fn dims(&self) -> Result<(usize, usize)> {
        match *self.weights.shape() {
            [i, o] if self.bias.shape() == [o] => Ok((i, o)),
            _ => Err(Error::shape(
                "dense",
                "weights must be (in, out) with bias (out)",
                self.weights.shape(),
                self.bias.shape(),
            )),
        }
    }
}

fn check_input<T: Scalar>(x: &Tensor<T>, in_dim: usize, w: &Tensor<T>) -> Result<usize> {
    let (rows, cols) = x.rows_cols();
    if x.rank() == 0 || cols != in_dim {
        return Err(Error::shape("dense", "input last dim must equal weights in_dim", x.shape(), w.shape()));
    }
    Ok(rows)
}

/// `x·W + b` over the last axis of `x`.
pub fn dense<T: Scalar>(x: &Tensor<T>, p: &DenseParams<T>) -> Result<Tensor<T>> {
    let (in_dim, out_dim) = p.dims()?;
    let rows = check_input(x, in_dim, &p.weights)?;
    let mut out = Vec::with_capacity(rows * out_dim);
    for _ in 0..rows {
        out.extend_from_slice(p.bias.data());
    }
    gemm(Trans::No, Trans::No, rows, out_dim, in_dim, x.data(), p.weights.data(), T::one(), &mut out);
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("rank >= 1") = out_dim;
    let y = Tensor::new(shape, out)?;
    y.debug_assert_finite("dense");
    Ok(y)
}

pub fn dense_vjp<T: Scalar>(x: &Tensor<T>, p: &DenseParams<T>, upstream: &Tensor<T>) -> Result<DenseGrads<T>> {
    let (in_dim, out_dim) = p.dims()?;
    let rows = check_input(x, in_dim, &p.weights)?;
    if upstream.len() != rows * out_dim || upstream.shape().last() != Some(&out_dim) {
        return Err(Error::shape("dense_vjp", "upstream must match the forward output", upstream.shape(), x.shape()));
    }
    let g = upstream.data();
    let mut gx = vec![T::zero(); rows * in_dim];
    gemm(Trans::No, Trans::Yes, rows, in_dim, out_dim, g, p.weights.data(), T::zero(), &mut gx);
    let mut gw = vec![T::zero(); in_dim * out_dim];
    gemm(Trans::Yes, Trans::No, in_dim, out_dim, rows, x.data(), g, T::zero(), &mut gw);
    let mut gb = vec![T::zero(); out_dim];
    for row in g.chunks(out_dim) {
        for (b, &u) in gb.iter_mut().zip(row) {
            *b += u;
        }
    }
    Ok(DenseGrads {
        x: Tensor::new(x.shape().to_vec(), gx)?,
        weights: Tensor::new(vec![in_dim, out_dim], gw)?,
        bias: Tensor::new(vec![out_dim], gb)?,
    })
}

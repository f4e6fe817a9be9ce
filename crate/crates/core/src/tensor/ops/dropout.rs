use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Inverted dropout: kept entries are scaled by `1 / (1 − rate)` so inference
/// is the identity. Returns the output and the applied multiplier per entry.
pub fn dropout<T: Scalar>(x: &Tensor<T>, rate: f64, seed: u64) -> Result<(Tensor<T>, Vec<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")));
    }
    let keep = T::of(1.0 / (1.0 - rate));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let y = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok((Tensor::new(x.shape().to_vec(), y)?, mask))
}

pub fn dropout_vjp<T: Scalar>(mask: &[T], upstream: &Tensor<T>) -> Result<Tensor<T>> {
    if mask.len() != upstream.len() {
        return Err(Error::shape("dropout_vjp", "mask size differs", upstream.shape(), &[mask.len()]));
    }
    let g = upstream.data().iter().zip(mask).map(|(&u, &m)| u * m).collect();
    Tensor::new(upstream.shape().to_vec(), g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::<f64>::from_fn(vec![4, 5], |i| i as f64);
        let (y, _) = dropout(&x, 0.0, 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn same_seed_same_mask() {
        let x = Tensor::<f64>::full(vec![100], 1.0);
        let (a, _) = dropout(&x, 0.5, 9).unwrap();
        let (b, _) = dropout(&x, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }
}

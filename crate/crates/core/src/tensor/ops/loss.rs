use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

fn check<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(usize, usize)> {
    let (rows, classes) = match *logits.shape() {
        [r, c] => (r, c),
        _ => return Err(Error::shape("scce", "logits must be rank 2", logits.shape(), &[labels.len()])),
    };
    if rows != labels.len() {
        return Err(Error::shape("scce", "one label per logit row", logits.shape(), &[labels.len()]));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {classes} classes")));
    }
    Ok((rows, classes))
}

fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// Sparse categorical cross-entropy: batch mean of `−log softmax(logits)[label]`.
pub fn scce_loss<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<T> {
    let (rows, classes) = check(logits, labels)?;
    if rows == 0 {
        return Ok(T::zero());
    }
    let total: T = logits
        .data()
        .chunks(classes)
        .zip(labels)
        .map(|(row, &l)| log_sum_exp(row) - row[l])
        .sum();
    Ok(total / T::of(rows as f64))
}

/// Gradient of [`scce_loss`] w.r.t. the logits: `(softmax − onehot) / batch`.
pub fn scce_vjp<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<Tensor<T>> {
    let (rows, classes) = check(logits, labels)?;
    let n = T::of(rows.max(1) as f64);
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &l) in logits.data().chunks(classes).zip(labels) {
        let lse = log_sum_exp(row);
        for (j, &v) in row.iter().enumerate() {
            let p = (v - lse).exp();
            let onehot = if j == l { T::one() } else { T::zero() };
            grad.push((p - onehot) / n);
        }
    }
    Tensor::new(logits.shape().to_vec(), grad)
}

/// `lambda · Σ w²` over the given weight tensors.
pub fn l2_penalty<'a, T: Scalar>(weights: impl IntoIterator<Item = &'a Tensor<T>>, lambda: f64) -> T {
    let lambda = T::of(lambda);
    if lambda == T::zero() {
        return T::zero();
    }
    lambda * weights.into_iter().map(|w| w.data().iter().map(|&v| v * v).sum::<T>()).sum::<T>()
}

/// Gradient of [`l2_penalty`] for one tensor: `2 · lambda · w`.
pub fn l2_grad<T: Scalar>(w: &Tensor<T>, lambda: f64) -> Tensor<T> {
    let k = T::of(2.0 * lambda);
    w.map(|v| k * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_classes() {
        let logits = Tensor::<f64>::zeros(vec![3, 16]);
        let l = scce_loss(&logits, &[0, 5, 15]).unwrap();
        assert!((l - 16f64.ln()).abs() < 1e-12);
        assert!((l - 2.7726).abs() < 1e-4);
    }

    #[test]
    fn peaked_logit_gives_near_zero_loss() {
        let mut logits = Tensor::<f64>::zeros(vec![1, 16]);
        logits.data_mut()[4] = 60.0;
        assert!(scce_loss(&logits, &[4]).unwrap() < 1e-20);
    }

    #[test]
    fn out_of_range_label_is_error() {
        let logits = Tensor::<f64>::zeros(vec![1, 4]);
        assert!(scce_loss(&logits, &[4]).is_err());
        assert!(scce_vjp(&logits, &[7]).is_err());
    }

    #[test]
    fn l2_direct_values() {
        let w = Tensor::<f64>::scalar(2.0);
        assert_eq!(l2_penalty([&w], 0.0), 0.0);
        assert!((l2_penalty([&w], 0.01) - 0.04).abs() < 1e-15);
        assert!((l2_grad(&w, 0.01).data()[0] - 0.04).abs() < 1e-15);
    }
}

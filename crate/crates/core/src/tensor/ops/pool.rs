use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Forward output of a max-pooling op together with the flat input index
/// that produced every output element.
#[derive(Debug, Clone)]
pub struct Pooled<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

/// Max pooling with a square `window` and `stride` over NHWC input.
///
/// Ties resolve to the lowest flat input index.
pub fn maxpool2d<T: Scalar>(x: &Tensor<T>, window: usize, stride: usize) -> Result<Pooled<T>> {
    let (n, h, w, c) = x.dims4("maxpool2d")?;
    if window == 0 || stride == 0 {
        return Err(Error::InvalidArgument("pool window and stride must be >= 1".into()));
    }
    if window > h || window > w {
        return Err(Error::shape(
            "maxpool2d",
            format!("window {window} larger than input"),
            x.shape(),
            &[window, window],
        ));
    }
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let src = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_idx = usize::MAX;
                    let mut best = T::neg_infinity();
                    // row-major scan: strict `>` keeps the lowest flat index on ties
                    for ky in 0..window {
                        for kx in 0..window {
                            let idx = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
                            if best_idx == usize::MAX || src[idx] > best {
                                best = src[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![n, oh, ow, c], out)?,
        argmax,
    })
}

/// Per-channel maximum over the whole spatial extent; output is `(n, 1, 1, c)`.
pub fn global_maxpool<T: Scalar>(x: &Tensor<T>) -> Result<Pooled<T>> {
    let (n, h, w, c) = x.dims4("global_maxpool")?;
    let src = x.data();
    let mut out = vec![T::neg_infinity(); n * c];
    let mut argmax = vec![usize::MAX; n * c];
    for b in 0..n {
        for p in 0..h * w {
            let base = (b * h * w + p) * c;
            for ch in 0..c {
                let o = b * c + ch;
                if argmax[o] == usize::MAX || src[base + ch] > out[o] {
                    out[o] = src[base + ch];
                    argmax[o] = base + ch;
                }
            }
        }
    }
    Ok(Pooled {
        output: Tensor::new(vec![n, 1, 1, c], out)?,
        argmax,
    })
}

/// Routes every upstream entry to the input position recorded in `argmax`.
/// Shared by [`maxpool2d`] and [`global_maxpool`].
pub fn maxpool_vjp<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    upstream: &Tensor<T>,
) -> Result<Tensor<T>> {
    if upstream.len() != argmax.len() {
        return Err(Error::shape(
            "maxpool_vjp",
            "upstream size differs from pooled output",
            upstream.shape(),
            &[argmax.len()],
        ));
    }
    let mut gx = Tensor::zeros(input_shape.to_vec());
    let data = gx.data_mut();
    for (&idx, &u) in argmax.iter().zip(upstream.data()) {
        data[idx] += u;
    }
    Ok(gx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_window_two_picks_bottom_right() {
        let x = Tensor::<f64>::from_fn(vec![1, 4, 4, 1], |i| i as f64);
        let p = maxpool2d(&x, 2, 2).unwrap();
        assert_eq!(p.output.data(), &[5.0, 7.0, 13.0, 15.0]);
    }

    #[test]
    fn constant_input_routes_to_first_index() {
        let x = Tensor::<f64>::full(vec![1, 2, 2, 1], 3.0);
        let p = maxpool2d(&x, 2, 2).unwrap();
        assert_eq!(p.output.data(), &[3.0]);
        assert_eq!(p.argmax, vec![0]);
        let g = maxpool_vjp(x.shape(), &p.argmax, &Tensor::full(vec![1, 1, 1, 1], 2.0)).unwrap();
        assert_eq!(g.data(), &[2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn window_larger_than_input_fails() {
        let x = Tensor::<f64>::zeros(vec![1, 2, 2, 1]);
        assert!(maxpool2d(&x, 3, 1).is_err());
    }

    #[test]
    fn global_max_of_ramp_is_last_element() {
        let x = Tensor::<f64>::from_fn(vec![1, 3, 3, 2], |i| i as f64);
        let p = global_maxpool(&x).unwrap();
        assert_eq!(p.output.shape(), &[1, 1, 1, 2]);
        assert_eq!(p.output.data(), &[16.0, 17.0]);
        let c = global_maxpool(&Tensor::<f64>::full(vec![2, 2, 2, 1], 0.7)).unwrap();
        assert_eq!(c.output.data(), &[0.7, 0.7]);
    }
}

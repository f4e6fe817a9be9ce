//! 2-D convolution over NHWC tensors, lowered to a single GEMM per chunk of
//! the batch via im2col.
//!
//! The operation is a cross-correlation: the kernel is applied without a
//! flip, which is what every mainstream CNN library calls "convolution".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{gemm, Scalar, Tensor, Trans};

/// Upper bound on the im2col buffer (elements) before the batch is chunked.
const COLS_BUDGET: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero-pad so that the output extent is `ceil(in / stride)`. Odd
    /// padding puts the extra pixel at the bottom/right.
    Same,
    /// No padding.
    Valid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    /// `(kh, kw, in_channels, out_channels)`.
    pub kernels: Tensor<T>,
    /// `(out_channels)`.
    pub bias: Tensor<T>,
    pub stride: usize,
    pub padding: Padding,
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub x: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Spatial bookkeeping for one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub kh: usize,
    pub kw: usize,
    pub out_c: usize,
    pub stride: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    fn patch_len(&self) -> usize {
        self.kh * self.kw * self.in_c
    }

    fn out_pixels(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// Output extent and leading pad along one axis.
pub fn conv_output_extent(
    input: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Option<(usize, usize)> {
    if stride == 0 || kernel == 0 || input == 0 {
        return None;
    }
    match padding {
        Padding::Valid => {
            if kernel > input {
                None
            } else {
                Some(((input - kernel) / stride + 1, 0))
            }
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Some((out, total / 2))
        }
    }
}

impl<T: Scalar> ConvParams<T> {
    pub fn validate(&self) -> Result<()> {
        let [kh, kw, _, oc] = match *self.kernels.shape() {
            [a, b, c, d] => [a, b, c, d],
            _ => {
                return Err(Error::shape(
                    "conv2d",
                    "kernels must be (kh, kw, in, out)",
                    self.kernels.shape(),
                    &[],
                ))
            }
        };
        if kh == 0 || kw == 0 {
            return Err(Error::InvalidArgument("kernel extents must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        if self.bias.shape() != [oc] {
            return Err(Error::shape(
                "conv2d",
                "bias length must equal out_channels",
                self.kernels.shape(),
                self.bias.shape(),
            ));
        }
        Ok(())
    }

    pub fn geometry(&self, x_shape: &[usize]) -> Result<ConvGeometry> {
        self.validate()?;
        let k = self.kernels.shape();
        let (n, h, w, c) = match *x_shape {
            [n, h, w, c] => (n, h, w, c),
            _ => {
                return Err(Error::shape(
                    "conv2d",
                    "input must be rank 4 (batch, h, w, c)",
                    x_shape,
                    k,
                ))
            }
        };
        if c != k[2] {
            return Err(Error::shape(
                "conv2d",
                "input channels do not match kernel in_channels",
                x_shape,
                k,
            ));
        }
        let (out_h, pad_top) = conv_output_extent(h, k[0], self.stride, self.padding)
            .ok_or_else(|| Error::shape("conv2d", "kernel does not fit input", x_shape, k))?;
        let (out_w, pad_left) = conv_output_extent(w, k[1], self.stride, self.padding)
            .ok_or_else(|| Error::shape("conv2d", "kernel does not fit input", x_shape, k))?;
        Ok(ConvGeometry {
            batch: n,
            in_h: h,
            in_w: w,
            in_c: c,
            kh: k[0],
            kw: k[1],
            out_c: k[3],
            stride: self.stride,
            pad_top,
            pad_left,
            out_h,
            out_w,
        })
    }
}

/// Writes the patches of sample `x` (one image, `h·w·c`) into `cols`, one row
/// per output pixel, columns ordered `(ky, kx, ci)`.
fn im2col<T: Scalar>(g: &ConvGeometry, x: &[T], cols: &mut [T]) {
    let plen = g.patch_len();
    cols.par_chunks_mut(plen * g.out_w)
        .enumerate()
        .for_each(|(oy, row_block)| {
            for ox in 0..g.out_w {
                let dst = &mut row_block[ox * plen..(ox + 1) * plen];
                let mut o = 0;
                for ky in 0..g.kh {
                    let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                    for kx in 0..g.kw {
                        let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                        let seg = &mut dst[o..o + g.in_c];
                        if iy < 0 || ix < 0 || iy >= g.in_h as isize || ix >= g.in_w as isize {
                            seg.fill(T::zero());
                        } else {
                            let src = (iy as usize * g.in_w + ix as usize) * g.in_c;
                            seg.copy_from_slice(&x[src..src + g.in_c]);
                        }
                        o += g.in_c;
                    }
                }
            }
        });
}

/// Scatter-adds patch gradients back into the image gradient of one sample.
fn col2im<T: Scalar>(g: &ConvGeometry, cols: &[T], gx: &mut [T]) {
    let plen = g.patch_len();
    for oy in 0..g.out_h {
        for ox in 0..g.out_w {
            let src = &cols[(oy * g.out_w + ox) * plen..][..plen];
            let mut o = 0;
            for ky in 0..g.kh {
                let iy = (oy * g.stride + ky) as isize - g.pad_top as isize;
                for kx in 0..g.kw {
                    let ix = (ox * g.stride + kx) as isize - g.pad_left as isize;
                    if iy >= 0 && ix >= 0 && iy < g.in_h as isize && ix < g.in_w as isize {
                        let dst = (iy as usize * g.in_w + ix as usize) * g.in_c;
                        for (d, &s) in gx[dst..dst + g.in_c].iter_mut().zip(&src[o..o + g.in_c]) {
                            *d += s;
                        }
                    }
                    o += g.in_c;
                }
            }
        }
    }
}

fn chunk_samples(g: &ConvGeometry) -> usize {
    let per_sample = (g.out_pixels() * g.patch_len()).max(1);
    (COLS_BUDGET / per_sample).clamp(1, g.batch.max(1))
}

fn im2col_batch<T: Scalar>(g: &ConvGeometry, x: &[T], first: usize, count: usize, cols: &mut [T]) {
    let in_len = g.in_h * g.in_w * g.in_c;
    let col_len = g.out_pixels() * g.patch_len();
    for s in 0..count {
        let xs = &x[(first + s) * in_len..(first + s + 1) * in_len];
        im2col(g, xs, &mut cols[s * col_len..(s + 1) * col_len]);
    }
}

pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, p: &ConvParams<T>) -> Result<Tensor<T>> {
    let g = p.geometry(x.shape())?;
    let plen = g.patch_len();
    let opix = g.out_pixels();
    let mut out = vec![T::zero(); g.batch * opix * g.out_c];
    let chunk = chunk_samples(&g);
    let mut cols = vec![T::zero(); chunk * opix * plen];
    let bias = p.bias.data();
    let mut first = 0;
    while first < g.batch {
        let count = chunk.min(g.batch - first);
        im2col_batch(&g, x.data(), first, count, &mut cols);
        let rows = count * opix;
        let dst = &mut out[first * opix * g.out_c..(first + count) * opix * g.out_c];
        for row in dst.chunks_mut(g.out_c) {
            row.copy_from_slice(bias);
        }
        gemm(
            Trans::No,
            Trans::No,
            rows,
            g.out_c,
            plen,
            &cols[..rows * plen],
            p.kernels.data(),
            T::one(),
            dst,
        );
        first += count;
    }
    let out = Tensor::new(vec![g.batch, g.out_h, g.out_w, g.out_c], out)?;
    out.debug_assert_finite("conv2d_forward");
    Ok(out)
}

pub fn conv2d_vjp<T: Scalar>(
    x: &Tensor<T>,
    p: &ConvParams<T>,
    upstream: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let g = p.geometry(x.shape())?;
    let out_shape = [g.batch, g.out_h, g.out_w, g.out_c];
    if upstream.shape() != out_shape {
        return Err(Error::shape(
            "conv2d_vjp",
            "upstream gradient must match the forward output shape",
            upstream.shape(),
            &out_shape,
        ));
    }
    let plen = g.patch_len();
    let opix = g.out_pixels();
    let in_len = g.in_h * g.in_w * g.in_c;
    let up = upstream.data();

    let mut gb = vec![T::zero(); g.out_c];
    for row in up.chunks(g.out_c) {
        for (b, &u) in gb.iter_mut().zip(row) {
            *b += u;
        }
    }

    let mut gk = vec![T::zero(); plen * g.out_c];
    let mut gx = vec![T::zero(); x.len()];
    let chunk = chunk_samples(&g);
    let mut cols = vec![T::zero(); chunk * opix * plen];
    let mut first = 0;
    while first < g.batch {
        let count = chunk.min(g.batch - first);
        let rows = count * opix;
        let up_chunk = &up[first * opix * g.out_c..(first + count) * opix * g.out_c];

        im2col_batch(&g, x.data(), first, count, &mut cols);
        // dK += colsᵀ · G
        gemm(
            Trans::Yes,
            Trans::No,
            plen,
            g.out_c,
            rows,
            &cols[..rows * plen],
            up_chunk,
            T::one(),
            &mut gk,
        );
        // dcols = G · Kᵀ, reusing the patch buffer.
        gemm(
            Trans::No,
            Trans::Yes,
            rows,
            plen,
            g.out_c,
            up_chunk,
            p.kernels.data(),
            T::zero(),
            &mut cols[..rows * plen],
        );
        let col_len = opix * plen;
        gx[first * in_len..(first + count) * in_len]
            .par_chunks_mut(in_len)
            .zip(cols[..rows * plen].par_chunks(col_len))
            .for_each(|(gxs, cs)| col2im(&g, cs, gxs));
        first += count;
    }

    Ok(ConvGrads {
        x: Tensor::new(x.shape().to_vec(), gx)?,
        kernels: Tensor::new(p.kernels.shape().to_vec(), gk)?,
        bias: Tensor::new(vec![g.out_c], gb)?,
    })
}

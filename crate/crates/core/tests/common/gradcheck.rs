//! One random finite-difference instance per differentiable primitive.
//! Each function returns the max relative error of its vjp against central
//! differences on a 64-bit instance with every axis at most 8.

use rand::Rng;
use wearcnn::tensor::ops::{self, BatchNormParams, ConvParams, DenseParams, Mode, Padding};
use wearcnn::tensor::Tensor;

use super::{distinct_tensor, dot, fd_gradient, max_rel_error, random_tensor, rng};

/// Absolute disagreement treated as exact (finite-difference round-off).
pub const ABS_FLOOR: f64 = 1e-9;

fn errs(pairs: &[(&[f64], &[f64])]) -> f64 {
    pairs
        .iter()
        .map(|(a, n)| max_rel_error(a, n, ABS_FLOOR))
        .fold(0.0, f64::max)
}

pub fn conv(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.gen_range(1..=2);
    let h = r.gen_range(3..=8);
    let w = r.gen_range(3..=8);
    let c = r.gen_range(1..=4);
    let k = r.gen_range(1..=3);
    let oc = r.gen_range(1..=4);
    let stride = r.gen_range(1..=2);
    let padding = if r.gen_bool(0.5) { Padding::Same } else { Padding::Valid };
    let x = random_tensor(&mut r, &[n, h, w, c]);
    let p = ConvParams {
        kernels: random_tensor(&mut r, &[k, k, c, oc]),
        bias: random_tensor(&mut r, &[oc]),
        stride,
        padding,
    };
    let y = ops::conv2d_forward(&x, &p).unwrap();
    let up = random_tensor(&mut r, y.shape());
    let g = ops::conv2d_vjp(&x, &p, &up).unwrap();
    let nx = fd_gradient(&x, |x| dot(&ops::conv2d_forward(x, &p).unwrap(), &up));
    let nk = fd_gradient(&p.kernels, |k| {
        let q = ConvParams { kernels: k.clone(), ..p.clone() };
        dot(&ops::conv2d_forward(&x, &q).unwrap(), &up)
    });
    let nb = fd_gradient(&p.bias, |b| {
        let q = ConvParams { bias: b.clone(), ..p.clone() };
        dot(&ops::conv2d_forward(&x, &q).unwrap(), &up)
    });
    errs(&[(g.x.data(), &nx), (g.kernels.data(), &nk), (g.bias.data(), &nb)])
}

pub fn relu(seed: u64) -> f64 {
    let mut r = rng(seed);
    let len = r.gen_range(1..=8);
    let rows = r.gen_range(1..=8);
    // keep every entry away from the kink at 0
    let x = Tensor::from_fn(vec![rows, len], |_| {
        let m: f64 = r.gen_range(1e-3..1.0);
        if r.gen_bool(0.5) { m } else { -m }
    });
    let up = random_tensor(&mut r, x.shape());
    let g = ops::relu_vjp(&x, &up).unwrap();
    let n = fd_gradient(&x, |x| dot(&ops::relu(x), &up));
    errs(&[(g.data(), &n)])
}

pub fn maxpool(seed: u64) -> f64 {
    let mut r = rng(seed);
    let window = r.gen_range(1..=3);
    let stride = r.gen_range(1..=3);
    let h = r.gen_range(window..=8);
    let w = r.gen_range(window..=8);
    let c = r.gen_range(1..=3);
    let x = distinct_tensor(&mut r, &[1, h, w, c], 1e-2);
    let p = ops::maxpool2d(&x, window, stride).unwrap();
    let up = random_tensor(&mut r, p.output.shape());
    let g = ops::maxpool_vjp(x.shape(), &p.argmax, &up).unwrap();
    let n = fd_gradient(&x, |x| dot(&ops::maxpool2d(x, window, stride).unwrap().output, &up));
    errs(&[(g.data(), &n)])
}

pub fn global_maxpool(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..=2), r.gen_range(1..=8), r.gen_range(1..=8), r.gen_range(1..=4)];
    let x = distinct_tensor(&mut r, &shape, 1e-2);
    let p = ops::global_maxpool(&x).unwrap();
    let up = random_tensor(&mut r, p.output.shape());
    let g = ops::maxpool_vjp(x.shape(), &p.argmax, &up).unwrap();
    let n = fd_gradient(&x, |x| dot(&ops::global_maxpool(x).unwrap().output, &up));
    errs(&[(g.data(), &n)])
}

pub fn dense(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (b, i, o) = (r.gen_range(1..=8), r.gen_range(1..=8), r.gen_range(1..=8));
    let x = random_tensor(&mut r, &[b, i]);
    let p = DenseParams {
        weights: random_tensor(&mut r, &[i, o]),
        bias: random_tensor(&mut r, &[o]),
    };
    let up = random_tensor(&mut r, &[b, o]);
    let g = ops::dense_vjp(&x, &p, &up).unwrap();
    let nx = fd_gradient(&x, |x| dot(&ops::dense(x, &p).unwrap(), &up));
    let nw = fd_gradient(&p.weights, |w| {
        let q = DenseParams { weights: w.clone(), bias: p.bias.clone() };
        dot(&ops::dense(&x, &q).unwrap(), &up)
    });
    let nb = fd_gradient(&p.bias, |b| {
        let q = DenseParams { weights: p.weights.clone(), bias: b.clone() };
        dot(&ops::dense(&x, &q).unwrap(), &up)
    });
    errs(&[(g.x.data(), &nx), (g.weights.data(), &nw), (g.bias.data(), &nb)])
}

pub fn batchnorm(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (b, f) = (r.gen_range(2..=8), r.gen_range(1..=8));
    let x = random_tensor(&mut r, &[b, f]);
    let mut p = BatchNormParams::new(f);
    p.gamma = Tensor::from_fn(vec![f], |_| r.gen_range(0.5..1.5));
    p.beta = random_tensor(&mut r, &[f]);
    p.running_mean = random_tensor(&mut r, &[f]);
    p.running_var = Tensor::from_fn(vec![f], |_| r.gen_range(0.5..2.0));
    let mode = if r.gen_bool(0.8) { Mode::Train } else { Mode::Infer };
    let up = random_tensor(&mut r, &[b, f]);
    let out = ops::batchnorm(&x, &p, mode).unwrap();
    let g = ops::batchnorm_vjp(&out.cache, &p, &up).unwrap();
    let nx = fd_gradient(&x, |x| dot(&ops::batchnorm(x, &p, mode).unwrap().y, &up));
    let ng = fd_gradient(&p.gamma, |gm| {
        let q = BatchNormParams { gamma: gm.clone(), ..p.clone() };
        dot(&ops::batchnorm(&x, &q, mode).unwrap().y, &up)
    });
    let nb = fd_gradient(&p.beta, |bt| {
        let q = BatchNormParams { beta: bt.clone(), ..p.clone() };
        dot(&ops::batchnorm(&x, &q, mode).unwrap().y, &up)
    });
    errs(&[(g.x.data(), &nx), (g.gamma.data(), &ng), (g.beta.data(), &nb)])
}

pub fn softmax(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..=8), r.gen_range(1..=8)];
    let x = random_tensor(&mut r, &shape).map(|v| 3.0 * v);
    let up = random_tensor(&mut r, x.shape());
    let y = ops::softmax(&x);
    let g = ops::softmax_vjp(&y, &up).unwrap();
    let n = fd_gradient(&x, |x| dot(&ops::softmax(x), &up));
    errs(&[(g.data(), &n)])
}

pub fn scce(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (b, c) = (r.gen_range(1..=8), r.gen_range(2..=8));
    let logits = random_tensor(&mut r, &[b, c]).map(|v| 4.0 * v);
    let labels: Vec<usize> = (0..b).map(|_| r.gen_range(0..c)).collect();
    let g = ops::scce_vjp(&logits, &labels).unwrap();
    let n = fd_gradient(&logits, |l| ops::scce_loss(l, &labels).unwrap());
    errs(&[(g.data(), &n)])
}

pub fn l2(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..=8), r.gen_range(1..=8)];
    let w = random_tensor(&mut r, &shape);
    let lambda = r.gen_range(0.0..0.1);
    let g = ops::l2_grad(&w, lambda);
    let n = fd_gradient(&w, |w| ops::l2_penalty([w], lambda));
    errs(&[(g.data(), &n)])
}

pub fn dropout(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..=8), r.gen_range(1..=8)];
    let x = random_tensor(&mut r, &shape);
    let rate = r.gen_range(0.0..0.9);
    let mask_seed = r.gen();
    let up = random_tensor(&mut r, x.shape());
    let (_, mask) = ops::dropout(&x, rate, mask_seed).unwrap();
    let g = ops::dropout_vjp(&mask, &up).unwrap();
    let n = fd_gradient(&x, |x| dot(&ops::dropout(x, rate, mask_seed).unwrap().0, &up));
    errs(&[(g.data(), &n)])
}

type Check = fn(u64) -> f64;

/// Every differentiable primitive, by name.
pub const SUITE: &[(&str, Check)] = &[
    ("conv2d", conv),
    ("relu", relu),
    ("maxpool2d", maxpool),
    ("global_maxpool", global_maxpool),
    ("dense", dense),
    ("batchnorm", batchnorm),
    ("softmax", softmax),
    ("scce", scce),
    ("l2_penalty", l2),
    ("dropout", dropout),
];

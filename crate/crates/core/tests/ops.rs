mod common;

use common::gradcheck;
use common::{dot, fd_gradient, max_rel_error, naive_conv, random_tensor, rng};
use proptest::prelude::*;
use rand::Rng;
use wearcnn::network::{CnnBlueprint, Network};
use wearcnn::tensor::ops::{self, ConvParams, Padding};
use wearcnn::tensor::Tensor;

#[test]
fn every_vjp_matches_finite_differences() {
    for (name, check) in gradcheck::SUITE {
        for seed in 0..10 {
            let err = check(seed);
            assert!(err < 1e-4, "{name} seed {seed}: max rel error {err:e}");
        }
    }
}

#[test]
fn conv_matches_naive_loops() {
    let mut r = rng(42);
    for _ in 0..50 {
        let c = r.gen_range(1..=4);
        let k = r.gen_range(1..=4);
        let h = r.gen_range(k..=9);
        let w = r.gen_range(k..=9);
        let oc = r.gen_range(1..=5);
        let x = random_tensor(&mut r, &[2, h, w, c]);
        let p = ConvParams {
            kernels: random_tensor(&mut r, &[k, k, c, oc]),
            bias: random_tensor(&mut r, &[oc]),
            stride: r.gen_range(1..=3),
            padding: if r.gen_bool(0.5) { Padding::Same } else { Padding::Valid },
        };
        let got = ops::conv2d_forward(&x, &p).unwrap();
        let want = naive_conv(&x, &p.kernels, &p.bias, p.stride, p.padding);
        assert_eq!(got.shape(), want.shape());
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn shrunken_network_gradient_spot_checks() {
    let bp = CnnBlueprint {
        input_shape: [16, 16, 3],
        filters: vec![4; 7],
        ..CnnBlueprint::desk()
    };
    let net: Network<f64> = Network::new(bp.build().unwrap(), 11).unwrap();
    let mut r = rng(5);
    let x = Tensor::from_fn(vec![4, 16, 16, 3], |_| r.gen_range(0.0..1.0));
    let labels = [3, 0, 15, 7];
    let out = net.loss_and_grads(&x, &labels, 0).unwrap();

    let trainable: Vec<String> = net.params.iter().filter(|p| p.trainable).map(|p| p.name.clone()).collect();
    for _ in 0..5 {
        let name = &trainable[r.gen_range(0..trainable.len())];
        let idx = r.gen_range(0..net.params.get(name).unwrap().len());
        let analytic = out.grads.get(name).unwrap().data()[idx];
        let h = 1e-6;
        let eval = |delta: f64| {
            let mut n = net.clone();
            n.params.get_mut(name).unwrap().data_mut()[idx] += delta;
            n.loss_and_grads(&x, &labels, 0).unwrap().loss
        };
        let numeric = (eval(h) - eval(-h)) / (2.0 * h);
        let err = max_rel_error(&[analytic], &[numeric], 1e-7);
        assert!(err < 1e-3, "{name}[{idx}]: analytic {analytic} numeric {numeric}");
    }
}

#[test]
fn lambda_zero_with_perfect_logits_has_near_zero_loss() {
    let mut logits = Tensor::<f64>::zeros(vec![2, 16]);
    logits.data_mut()[3] = 50.0;
    logits.data_mut()[16 + 9] = 50.0;
    let loss = ops::scce_loss(&logits, &[3, 9]).unwrap() + ops::l2_penalty::<f64>([], 0.0);
    assert!(loss < 1e-15);
}

#[test]
fn l2_gradient_matches_finite_differences() {
    let w = Tensor::<f64>::scalar(2.0);
    let n = fd_gradient(&w, |w| ops::l2_penalty([w], 0.01));
    assert!((n[0] - 0.04).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one_and_ignore_shifts(
        vals in prop::collection::vec(-50.0f64..50.0, 1..24),
        shift in -100.0f64..100.0,
    ) {
        let x = Tensor::new(vec![vals.len()], vals.clone()).unwrap();
        let s = ops::softmax(&x);
        prop_assert!((s.sum() - 1.0).abs() < 1e-12);
        prop_assert!(s.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let shifted = ops::softmax(&x.map(|v| v + shift));
        for (a, b) in s.data().iter().zip(shifted.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn maxpool_vjp_conserves_gradient_mass(seed in any::<u64>(), window in 1usize..4, stride in 1usize..4) {
        let mut r = rng(seed);
        let x = common::distinct_tensor(&mut r, &[2, 8, 7, 3], 1.0);
        let p = ops::maxpool2d(&x, window, stride).unwrap();
        let up = random_tensor(&mut r, p.output.shape());
        let g = ops::maxpool_vjp(x.shape(), &p.argmax, &up).unwrap();
        prop_assert!((g.sum() - up.sum()).abs() < 1e-12);
    }

    #[test]
    fn relu_output_is_nonnegative_and_idempotent(vals in prop::collection::vec(-10.0f64..10.0, 1..32)) {
        let x = Tensor::new(vec![vals.len()], vals).unwrap();
        let y = ops::relu(&x);
        prop_assert!(y.data().iter().all(|&v| v >= 0.0));
        prop_assert_eq!(ops::relu(&y), y);
    }

    #[test]
    fn conv_is_linear_in_upstream(seed in any::<u64>()) {
        // <vjp(u), dx> equals <u, J dx>: the adjoint identity
        let mut r = rng(seed);
        let x = random_tensor(&mut r, &[1, 5, 6, 2]);
        let p = ConvParams {
            kernels: random_tensor(&mut r, &[3, 3, 2, 3]),
            bias: Tensor::zeros(vec![3]),
            stride: 1,
            padding: Padding::Same,
        };
        let y = ops::conv2d_forward(&x, &p).unwrap();
        let up = random_tensor(&mut r, y.shape());
        let dx = random_tensor(&mut r, x.shape());
        let g = ops::conv2d_vjp(&x, &p, &up).unwrap();
        let lhs = dot(&g.x, &dx);
        let rhs = dot(&up, &ops::conv2d_forward(&dx, &p).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}

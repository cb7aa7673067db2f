mod common;

use common::{gradcheck, rand_tensor};
use lddim_autodiff::{concat, AdError, Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-5;

#[test]
fn add_elementwise() {
    let t = Tape::new();
    let a = t.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
    let b = t.leaf(Tensor::new(vec![2], vec![3.0, 4.0]).unwrap());
    assert_eq!(a.add(&b).unwrap().value().data(), &[4.0, 6.0]);
}

#[test]
fn matmul_identity() {
    let t = Tape::new();
    let eye = t.leaf(
        Tensor::new(
            vec![3, 3],
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = rand_tensor(&mut rng, &[3, 5], -1.0, 1.0);
    let xv = t.leaf(x.clone());
    assert_eq!(eye.matmul(&xv).unwrap().value(), x);
}

#[test]
fn conv2d_center_equals_neighborhood_sum() {
    // 3x3 all-ones kernel over a 4x4 field, stride 1, zero padding 1:
    // output at (1,1) is the sum of the 3x3 neighborhood of input (1,1).
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = rand_tensor(&mut rng, &[1, 1, 4, 4], -1.0, 1.0);
    let t = Tape::new();
    let xv = t.leaf(x.clone());
    let k = t.leaf(Tensor::full(&[1, 1, 3, 3], 1.0));
    let y = xv.conv2d(&k, 1, 1).unwrap().value();
    // direct summation oracle
    let mut expect = 0.0;
    for iy in 0..3 {
        for ix in 0..3 {
            expect += x.data()[iy * 4 + ix];
        }
    }
    let got = y.data()[1 * 4 + 1];
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn backward_square() {
    let t = Tape::new();
    let x = t.leaf(Tensor::scalar(3.0));
    let y = x.mul(&x).unwrap();
    let g = t.backward(&y).unwrap();
    assert_eq!(g.wrt(&x).data(), &[6.0]);
}

#[test]
fn backward_sum_gives_ones() {
    let t = Tape::new();
    let x = t.leaf(Tensor::new(vec![4], vec![1.0, -2.0, 0.5, 9.0]).unwrap());
    let y = x.sum().unwrap();
    let g = t.backward(&y).unwrap();
    assert_eq!(g.wrt(&x).data(), &[1.0, 1.0, 1.0, 1.0]);
}

#[test]
fn backward_rejects_non_scalar() {
    let t = Tape::new();
    let x = t.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
    assert!(matches!(
        t.backward(&x),
        Err(AdError::NonScalarOutput(_))
    ));
}

#[test]
fn untouched_leaf_keeps_zero_gradient() {
    let t = Tape::new();
    let x = t.leaf(Tensor::scalar(2.0));
    let unused = t.leaf(Tensor::new(vec![3], vec![1.0, 1.0, 1.0]).unwrap());
    let y = x.mul(&x).unwrap();
    let g = t.backward(&y).unwrap();
    assert_eq!(g.wrt(&unused).data(), &[0.0, 0.0, 0.0]);
}

#[test]
fn tape_linearity_visit_count() {
    let t = Tape::new();
    let x = t.leaf(Tensor::scalar(1.5));
    let mut y = x.clone();
    for _ in 0..20 {
        y = y.mul(&x).unwrap();
    }
    let s = y.sum().unwrap();
    let g = t.backward(&s).unwrap();
    assert_eq!(g.visited, t.len());
}

#[test]
fn shape_mismatch_names_op() {
    let t = Tape::new();
    let a = t.leaf(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
    let b = t.leaf(Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap());
    let err = a.add(&b).unwrap_err().to_string();
    assert!(err.contains("add") && err.contains("[2]") && err.contains("[3]"), "{err}");
}

#[test]
fn gradcheck_elementwise_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let a = rand_tensor(&mut rng, &[3, 4], -2.0, 2.0);
    let b = rand_tensor(&mut rng, &[3, 4], -2.0, 2.0);
    gradcheck(&[a.clone(), b.clone()], TOL, &|l| {
        l[0].add(&l[1]).unwrap().sum().unwrap()
    });
    gradcheck(&[a.clone(), b.clone()], TOL, &|l| {
        l[0].sub(&l[1]).unwrap().mul(&l[0]).unwrap().sum().unwrap()
    });
    gradcheck(&[a.clone()], TOL, &|l| {
        l[0].scale(-1.7).unwrap().add_scalar(0.3).unwrap().mean().unwrap()
    });
}

#[test]
fn gradcheck_activations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // keep values away from the relu/abs kinks
    let pos = rand_tensor(&mut rng, &[2, 5], 0.2, 2.0);
    let neg = rand_tensor(&mut rng, &[2, 5], -2.0, -0.2);
    let mixed = rand_tensor(&mut rng, &[2, 5], 0.1, 1.5);
    gradcheck(&[pos.clone()], TOL, &|l| l[0].relu().unwrap().sum().unwrap());
    gradcheck(&[neg.clone()], TOL, &|l| l[0].relu().unwrap().sum().unwrap());
    gradcheck(&[mixed.clone()], TOL, &|l| l[0].silu().unwrap().sum().unwrap());
    gradcheck(&[mixed.clone()], TOL, &|l| l[0].tanh().unwrap().sum().unwrap());
    gradcheck(&[mixed.clone()], TOL, &|l| l[0].exp().unwrap().sum().unwrap());
    gradcheck(&[pos.clone()], TOL, &|l| l[0].log().unwrap().sum().unwrap());
    gradcheck(&[neg], TOL, &|l| l[0].abs().unwrap().sum().unwrap());
}

#[test]
fn gradcheck_matmul_and_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = rand_tensor(&mut rng, &[3, 4], -1.0, 1.0);
    let b = rand_tensor(&mut rng, &[4, 2], -1.0, 1.0);
    let bias = rand_tensor(&mut rng, &[2], -1.0, 1.0);
    gradcheck(&[a, b, bias], TOL, &|l| {
        l[0].matmul(&l[1])
            .unwrap()
            .add_row_bias(&l[2])
            .unwrap()
            .tanh()
            .unwrap()
            .sum()
            .unwrap()
    });
}

#[test]
fn gradcheck_conv2d_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (stride, pad) in [(1usize, 0usize), (1, 1), (2, 1)] {
        let x = rand_tensor(&mut rng, &[2, 3, 5, 5], -1.0, 1.0);
        let w = rand_tensor(&mut rng, &[4, 3, 3, 3], -0.5, 0.5);
        let b = rand_tensor(&mut rng, &[4], -0.5, 0.5);
        gradcheck(&[x, w, b], TOL, &|l| {
            l[0].conv2d(&l[1], stride, pad)
                .unwrap()
                .add_chan_bias(&l[2])
                .unwrap()
                .silu()
                .unwrap()
                .sum()
                .unwrap()
        });
    }
}

#[test]
fn gradcheck_conv_transpose2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (stride, pad) in [(1usize, 0usize), (2, 1)] {
        let x = rand_tensor(&mut rng, &[1, 3, 4, 4], -1.0, 1.0);
        let w = rand_tensor(&mut rng, &[3, 2, 3, 3], -0.5, 0.5);
        gradcheck(&[x, w], TOL, &|l| {
            l[0].conv_transpose2d(&l[1], stride, pad)
                .unwrap()
                .tanh()
                .unwrap()
                .sum()
                .unwrap()
        });
    }
}

#[test]
fn conv_transpose_is_adjoint_of_conv() {
    // <conv(x), y> == <x, convT(y)> with shared weights
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // 5 -> 3 under (s=2, p=1, k=3) and back 3 -> 5: sizes are adjoint-consistent
    let x = rand_tensor(&mut rng, &[1, 2, 5, 5], -1.0, 1.0);
    let w = rand_tensor(&mut rng, &[3, 2, 3, 3], -1.0, 1.0);
    // transpose-conv weight layout is [cin, cout, kh, kw]; with conv weight
    // [cout, cin, kh, kw] the adjoint uses the same buffer reinterpreted.
    let wt_data = w.data().to_vec();
    let stride = 2;
    let pad = 1;
    let t = Tape::new();
    let xv = t.leaf(x.clone());
    let wv = t.leaf(w);
    let y = xv.conv2d(&wv, stride, pad).unwrap().value();
    let cot = rand_tensor(&mut rng, y.shape(), -1.0, 1.0);
    let lhs: f64 = y.data().iter().zip(cot.data()).map(|(a, b)| a * b).sum();

    let cv = t.leaf(cot);
    let wtv = t.leaf(Tensor::new(vec![3, 2, 3, 3], wt_data).unwrap());
    let back = cv.conv_transpose2d(&wtv, stride, pad).unwrap().value();
    let rhs: f64 = back.data().iter().zip(x.data()).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
}

#[test]
fn gradcheck_shape_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = rand_tensor(&mut rng, &[2, 3, 4], -1.0, 1.0);
    let b = rand_tensor(&mut rng, &[2, 2, 4], -1.0, 1.0);
    gradcheck(&[a.clone()], TOL, &|l| {
        l[0].reshape(&[6, 4]).unwrap().tanh().unwrap().sum().unwrap()
    });
    gradcheck(&[a.clone()], TOL, &|l| {
        l[0].slice(1, 1, 3).unwrap().mul(&l[0].slice(1, 0, 2).unwrap()).unwrap().sum().unwrap()
    });
    gradcheck(&[a, b], TOL, &|l| {
        concat(&[&l[0], &l[1]], 1).unwrap().tanh().unwrap().sum().unwrap()
    });
}

#[test]
fn gradcheck_three_layer_dense_network() {
    // random 3-layer dense net, all parameter gradients vs central FD
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let x = rand_tensor(&mut rng, &[4, 6], -1.0, 1.0);
    let w1 = rand_tensor(&mut rng, &[6, 8], -0.5, 0.5);
    let b1 = rand_tensor(&mut rng, &[8], -0.5, 0.5);
    let w2 = rand_tensor(&mut rng, &[8, 8], -0.5, 0.5);
    let b2 = rand_tensor(&mut rng, &[8], -0.5, 0.5);
    let w3 = rand_tensor(&mut rng, &[8, 1], -0.5, 0.5);
    let b3 = rand_tensor(&mut rng, &[1], -0.5, 0.5);
    gradcheck(&[x, w1, b1, w2, b2, w3, b3], TOL, &|l| {
        let h1 = l[0].matmul(&l[1]).unwrap().add_row_bias(&l[2]).unwrap().tanh().unwrap();
        let h2 = h1.matmul(&l[3]).unwrap().add_row_bias(&l[4]).unwrap().silu().unwrap();
        h2.matmul(&l[5]).unwrap().add_row_bias(&l[6]).unwrap().sum().unwrap()
    });
}

#[test]
fn deterministic_forward_and_gradients() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let x = rand_tensor(&mut rng, &[2, 2, 6, 6], -1.0, 1.0);
        let w = rand_tensor(&mut rng, &[3, 2, 3, 3], -0.5, 0.5);
        let t = Tape::new();
        let xv = t.leaf(x);
        let wv = t.leaf(w);
        let y = xv.conv2d(&wv, 1, 1).unwrap().silu().unwrap().sum().unwrap();
        let g = t.backward(&y).unwrap();
        (y.value().scalar_value(), g.wrt(&wv).data().to_vec())
    };
    let (v1, g1) = run();
    let (v2, g2) = run();
    assert_eq!(v1.to_bits(), v2.to_bits());
    assert_eq!(g1, g2);
}

#[test]
fn backward_with_cotangent_seeds_interior_node() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = rand_tensor(&mut rng, &[5], 0.5, 2.0);
    let t = Tape::new();
    let xv = t.leaf(x.clone());
    let y = xv.log().unwrap();
    let cot = rand_tensor(&mut rng, &[5], -1.0, 1.0);
    let g = t.backward_with(&y, &cot).unwrap();
    let got = g.wrt(&xv);
    for i in 0..5 {
        let expect = cot.data()[i] / x.data()[i];
        assert!((got.data()[i] - expect).abs() < 1e-14);
    }
}

use lddim_autodiff::{Tensor, Var};

/// Central finite differences of a scalar function of several tensors.
/// `f` must rebuild its computation from scratch on every call.
pub fn fd_gradients(
    inputs: &[Tensor],
    step: f64,
    f: &dyn Fn(&[Tensor]) -> f64,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(inputs.len());
    for i in 0..inputs.len() {
        let mut g = vec![0.0; inputs[i].len()];
        for j in 0..inputs[i].len() {
            let h = step * (1.0 + inputs[i].data()[j].abs());
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            g[j] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

/// Check reverse-mode gradients of `build` (which maps leaves to a scalar Var)
/// against central finite differences.
pub fn gradcheck(inputs: &[Tensor], tol: f64, build: &dyn Fn(&[Var]) -> Var) {
    let eval = |ts: &[Tensor]| -> f64 {
        let tape = lddim_autodiff::Tape::new();
        let leaves: Vec<Var> = ts.iter().map(|t| tape.leaf(t.clone())).collect();
        build(&leaves).value().scalar_value()
    };
    let fd = fd_gradients(inputs, 1e-6, &eval);

    let tape = lddim_autodiff::Tape::new();
    let leaves: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&leaves);
    let grads = tape.backward(&out).unwrap();
    for (i, leaf) in leaves.iter().enumerate() {
        let g = grads.wrt(leaf);
        let err = max_rel_err(g.data(), &fd[i]);
        assert!(
            err < tol,
            "gradient mismatch for input {i}: rel err {err:.3e} (tol {tol:.1e})\nad: {:?}\nfd: {:?}",
            g.data(),
            fd[i]
        );
    }
}

pub fn rand_tensor(rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    use rand::Rng;
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

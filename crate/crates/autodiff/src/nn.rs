//! Layer building blocks. Layers hold indices into a `ParameterSet`;
//! forward passes receive the tape-bound parameter leaves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::optim::ParameterSet;
use crate::tape::Var;
use crate::tensor::Tensor;

fn normal(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    // Box-Muller on two uniform draws
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() * std
}

fn init_tensor(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize) -> Tensor {
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| normal(rng, std)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct Conv2dLayer {
    pub w: usize,
    pub b: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2dLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParameterSet,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = ps.add(
            &format!("{name}.w"),
            init_tensor(rng, &[cout, cin, k, k], cin * k * k),
        );
        let b = ps.add(&format!("{name}.b"), Tensor::zeros(&[cout]));
        Self { w, b, stride, pad }
    }

    /// Same shapes as `new`, but weight and bias start at zero (identity-free head).
    #[allow(clippy::too_many_arguments)]
    pub fn new_zeroed(
        ps: &mut ParameterSet,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let w = ps.add(&format!("{name}.w"), Tensor::zeros(&[cout, cin, k, k]));
        let b = ps.add(&format!("{name}.b"), Tensor::zeros(&[cout]));
        Self { w, b, stride, pad }
    }

    pub fn forward(&self, x: &Var, params: &[Var]) -> Result<Var> {
        x.conv2d(&params[self.w], self.stride, self.pad)?
            .add_chan_bias(&params[self.b])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvT2dLayer {
    pub w: usize,
    pub b: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvT2dLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ps: &mut ParameterSet,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = ps.add(
            &format!("{name}.w"),
            init_tensor(rng, &[cin, cout, k, k], cin * k * k),
        );
        let b = ps.add(&format!("{name}.b"), Tensor::zeros(&[cout]));
        Self { w, b, stride, pad }
    }

    pub fn forward(&self, x: &Var, params: &[Var]) -> Result<Var> {
        x.conv_transpose2d(&params[self.w], self.stride, self.pad)?
            .add_chan_bias(&params[self.b])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenseLayer {
    pub w: usize,
    pub b: usize,
}

impl DenseLayer {
    pub fn new(
        ps: &mut ParameterSet,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = ps.add(
            &format!("{name}.w"),
            init_tensor(rng, &[fan_in, fan_out], fan_in),
        );
        let b = ps.add(&format!("{name}.b"), Tensor::zeros(&[fan_out]));
        Self { w, b }
    }

    /// x: [batch, fan_in] -> [batch, fan_out]
    pub fn forward(&self, x: &Var, params: &[Var]) -> Result<Var> {
        x.matmul(&params[self.w])?.add_row_bias(&params[self.b])
    }
}

/// Sinusoidal embedding of a diffusion timestep, dimension `dim` (even).
pub fn timestep_embedding(t: usize, dim: usize) -> Tensor {
    assert!(dim % 2 == 0);
    let half = dim / 2;
    let mut data = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = (10_000f64).powf(-(i as f64) / half as f64);
        data.push((t as f64 * freq).sin());
    }
    for i in 0..half {
        let freq = (10_000f64).powf(-(i as f64) / half as f64);
        data.push((t as f64 * freq).cos());
    }
    Tensor::new(vec![1, dim], data).unwrap()
}

//! Named parameter storage with Adam state.

use crate::error::{AdError, Result};
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Named parameter tensors plus first/second moment buffers and step count.
#[derive(Debug, Clone, Default)]
pub struct ParameterSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, t: Tensor) -> usize {
        assert!(
            self.index_of(name).is_none(),
            "duplicate parameter name `{name}`"
        );
        let n = t.len();
        self.names.push(name.to_string());
        self.tensors.push(t);
        self.m.push(vec![0.0; n]);
        self.v.push(vec![0.0; n]);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn by_name(&self, name: &str) -> Result<&Tensor> {
        self.index_of(name)
            .map(|i| &self.tensors[i])
            .ok_or_else(|| AdError::UnknownParameter(name.to_string()))
    }

    pub(crate) fn moments(&self, idx: usize) -> (&[f64], &[f64]) {
        (&self.m[idx], &self.v[idx])
    }

    pub(crate) fn restore_entry(&mut self, name: &str, t: Tensor, m: Vec<f64>, v: Vec<f64>) {
        let idx = self.add(name, t);
        self.m[idx] = m;
        self.v[idx] = v;
    }

    pub(crate) fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    /// Record every parameter as a leaf on `tape`, in storage order.
    pub fn bind(&self, tape: &Tape) -> Vec<Var> {
        self.tensors.iter().map(|t| tape.leaf(t.clone())).collect()
    }

    /// Collect d(loss)/d(param) for every bound leaf.
    pub fn collect_grads(&self, grads: &Gradients, bound: &[Var]) -> Vec<Tensor> {
        bound.iter().map(|v| grads.wrt(v)).collect()
    }

    /// Bias-corrected Adam update. Rejects NaN gradients before touching state.
    pub fn adam_step(&mut self, grads: &[Tensor], cfg: &AdamConfig) -> Result<()> {
        if grads.len() != self.tensors.len() {
            return Err(AdError::GradientCount {
                got: grads.len(),
                expected: self.tensors.len(),
            });
        }
        for (i, g) in grads.iter().enumerate() {
            if g.data().iter().any(|x| x.is_nan()) {
                return Err(AdError::NanGradient(self.names[i].clone()));
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - cfg.beta1.powf(t);
        let bc2 = 1.0 - cfg.beta2.powf(t);
        for i in 0..self.tensors.len() {
            let g = grads[i].data();
            let p = self.tensors[i].data_mut();
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..p.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }

    /// FNV-1a over the raw parameter bits; used to assert frozen weights.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for (name, t) in self.names.iter().zip(&self.tensors) {
            eat(name.as_bytes());
            for v in t.data() {
                eat(&v.to_le_bytes());
            }
        }
        h
    }
}

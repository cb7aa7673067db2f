//! Two-phase conductivity fields: two log-normal material fields
//! assigned across the domain by thresholding a correlated splitting
//! field at an empirical quantile, giving exact per-sample area
//! control.

use rand::Rng;

use lddim_autodiff::rng::stream;
use lddim_fvm::ScalarField2D;

use crate::error::{Result, SynthError};
use crate::matern::matern_with_label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimaterialParams {
    pub high_log_mean: f64,
    pub low_log_mean: f64,
    pub matern_nu: f64,
    pub matern_length: f64,
    pub split_length: f64,
    /// Uniform draw in [0, 1); the quantile threshold is 0.25 + 0.5 p.
    pub threshold_p: f64,
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
}

impl BimaterialParams {
    /// Default material parameters with the threshold drawn from the seed.
    pub fn from_seed(nx: usize, ny: usize, seed: u64) -> Self {
        let p: f64 = stream(seed, "bimaterial-threshold").gen();
        Self {
            high_log_mean: (1e-5f64).ln(),
            low_log_mean: (1e-8f64).ln(),
            matern_nu: 1.0,
            matern_length: 50.0,
            split_length: 200.0,
            threshold_p: p,
            nx,
            ny,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        0.25 + 0.5 * self.threshold_p
    }
}

/// A generated two-phase sample with its phase indicator.
#[derive(Debug, Clone)]
pub struct BimaterialSample {
    pub k: ScalarField2D,
    /// True where the high-conductivity material was assigned.
    pub high_phase: Vec<bool>,
    pub alpha: f64,
}

impl BimaterialSample {
    pub fn high_fraction(&self) -> f64 {
        let high = self.high_phase.iter().filter(|&&b| b).count();
        high as f64 / self.high_phase.len() as f64
    }
}

/// High-conductivity phase where the splitting field exceeds its
/// empirical alpha-quantile, low phase elsewhere.
pub fn bimaterial_field(params: &BimaterialParams) -> Result<BimaterialSample> {
    if !(0.0..=1.0).contains(&params.threshold_p) {
        return Err(SynthError::InvalidParams(format!(
            "threshold draw must lie in [0, 1], got {}",
            params.threshold_p
        )));
    }
    let (nx, ny, seed) = (params.nx, params.ny, params.seed);
    let phi1 = matern_with_label(params.matern_length, params.matern_nu, nx, ny, seed, "phi1")?;
    let phi2 = matern_with_label(params.matern_length, params.matern_nu, nx, ny, seed, "phi2")?;
    let split = matern_with_label(params.split_length, params.matern_nu, nx, ny, seed, "split")?;

    let n = nx * ny;
    let alpha = params.alpha();
    let mut sorted: Vec<f64> = split.values().to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = ((alpha * n as f64) as usize).min(n - 1);
    let threshold = sorted[rank];

    let mut k = vec![0.0; n];
    let mut high_phase = vec![false; n];
    for p in 0..n {
        if split.values()[p] > threshold {
            high_phase[p] = true;
            k[p] = (params.high_log_mean + phi1.values()[p]).exp();
        } else {
            k[p] = (params.low_log_mean + phi2.values()[p]).exp();
        }
    }
    Ok(BimaterialSample {
        k: ScalarField2D::new(nx, ny, phi1.dx, phi1.dy, k)?,
        high_phase,
        alpha,
    })
}

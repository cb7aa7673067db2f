//! Spectrally synthesized Gaussian random conductivity fields.
//!
//! The log-field is filtered white noise with Gaussian spectral filter
//! `S(k) = exp(-0.5 ||k||^2 lambda^2)`, standardized to zero mean and
//! unit variance, clipped to [-3, 3], exponentiated, then min-max
//! normalized to [0, 1].

use lddim_autodiff::rng::stream;
use lddim_fvm::ScalarField2D;

use crate::error::{Result, SynthError};
use crate::spectral::filtered_noise;

pub const DOMAIN_SIZE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrfParams {
    /// Spectral correlation length; larger values suppress high
    /// frequencies and smooth the field. In-distribution range 0.1..0.7.
    pub correlation_length: f64,
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
}

impl GrfParams {
    pub fn new(correlation_length: f64, nx: usize, ny: usize, seed: u64) -> Result<Self> {
        if !(correlation_length > 0.0) {
            return Err(SynthError::InvalidParams(format!(
                "correlation length must be positive, got {correlation_length}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(SynthError::InvalidParams(format!(
                "grid must be non-empty, got {nx}x{ny}"
            )));
        }
        Ok(Self {
            correlation_length,
            nx,
            ny,
            seed,
        })
    }
}

/// Standardize in place to exactly zero mean and unit variance
/// (population variance), then return the values.
fn standardize(mut y: Vec<f64>) -> Result<Vec<f64>> {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    for v in y.iter_mut() {
        *v -= mean;
    }
    let var = y.iter().map(|v| v * v).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(SynthError::DegenerateField("zero-variance log-field".into()));
    }
    let std = var.sqrt();
    for v in y.iter_mut() {
        *v /= std;
    }
    Ok(y)
}

/// The standardized, clipped log-field before exponentiation; exposed
/// so its exact statistics can be checked.
pub fn gaussian_log_field(params: &GrfParams) -> Result<Vec<f64>> {
    let lambda = params.correlation_length;
    let mut rng = stream(params.seed, "grf");
    let y = filtered_noise(params.nx, params.ny, &mut rng, |kx, ky| {
        (-0.5 * (kx * kx + ky * ky) * lambda * lambda).exp()
    });
    let mut y = standardize(y)?;
    for v in y.iter_mut() {
        *v = v.clamp(-3.0, 3.0);
    }
    Ok(y)
}

/// Standardized pre-clip log-field, for checking the exact mean and
/// variance of the standardization step.
pub fn gaussian_log_field_preclip(params: &GrfParams) -> Result<Vec<f64>> {
    let lambda = params.correlation_length;
    let mut rng = stream(params.seed, "grf");
    let y = filtered_noise(params.nx, params.ny, &mut rng, |kx, ky| {
        (-0.5 * (kx * kx + ky * ky) * lambda * lambda).exp()
    });
    standardize(y)
}

pub fn gaussian_field(params: &GrfParams) -> Result<ScalarField2D> {
    let y = gaussian_log_field(params)?;
    let mut k: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let lo = k.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(SynthError::DegenerateField(
            "constant field cannot be min-max normalized".into(),
        ));
    }
    let range = hi - lo;
    for v in k.iter_mut() {
        *v = (*v - lo) / range;
    }
    let dx = DOMAIN_SIZE / params.nx as f64;
    let dy = DOMAIN_SIZE / params.ny as f64;
    Ok(ScalarField2D::new(params.nx, params.ny, dx, dy, k)?)
}

/// Mean absolute difference across neighboring cells; decreases as the
/// field gets smoother.
pub fn total_variation(f: &ScalarField2D) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for j in 0..f.ny {
        for i in 0..f.nx {
            if i + 1 < f.nx {
                acc += (f.at(i + 1, j) - f.at(i, j)).abs();
                count += 1;
            }
            if j + 1 < f.ny {
                acc += (f.at(i, j + 1) - f.at(i, j)).abs();
                count += 1;
            }
        }
    }
    acc / count as f64
}

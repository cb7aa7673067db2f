//! Stationary Gaussian processes with a Matern covariance, sampled
//! spectrally on the periodic grid.
//!
//! For smoothness nu = 1 in two dimensions the spectral density is
//! proportional to `(2/l^2 + ||k||^2)^-2` with k in radians per unit
//! length. The sample is scaled by the exact discrete stationary
//! standard deviation, so the marginal variance is one in expectation.

use lddim_autodiff::rng::stream;
use lddim_fvm::ScalarField2D;

use crate::error::{Result, SynthError};
use crate::grf::DOMAIN_SIZE;
use crate::spectral::{filtered_noise, freq_index};

pub fn matern_gaussian_process(
    length: f64,
    nu: f64,
    nx: usize,
    ny: usize,
    seed: u64,
) -> Result<ScalarField2D> {
    matern_with_label(length, nu, nx, ny, seed, "matern")
}

/// Variant with a caller-supplied stream label so several independent
/// processes can share one seed.
pub fn matern_with_label(
    length: f64,
    nu: f64,
    nx: usize,
    ny: usize,
    seed: u64,
    label: &str,
) -> Result<ScalarField2D> {
    if nu != 1.0 {
        return Err(SynthError::UnsupportedNu(nu));
    }
    if !(length > 0.0) {
        return Err(SynthError::InvalidParams(format!(
            "Matern length must be positive, got {length}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(SynthError::InvalidParams(format!(
            "grid must be non-empty, got {nx}x{ny}"
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let density = move |kx: f64, ky: f64| {
        let px = two_pi * kx / DOMAIN_SIZE;
        let py = two_pi * ky / DOMAIN_SIZE;
        let base = 2.0 / (length * length) + px * px + py * py;
        1.0 / (base * base)
    };

    let mut rng = stream(seed, label);
    let mut y = filtered_noise(nx, ny, &mut rng, density);

    // exact discrete stationary variance: (1/N) * sum_k S(k)
    let mut var = 0.0;
    for j in 0..ny {
        let ky = freq_index(j, ny);
        for i in 0..nx {
            let kx = freq_index(i, nx);
            var += density(kx, ky);
        }
    }
    var /= (nx * ny) as f64;
    let std = var.sqrt();
    for v in y.iter_mut() {
        *v /= std;
    }
    let dx = DOMAIN_SIZE / nx as f64;
    let dy = DOMAIN_SIZE / ny as f64;
    Ok(ScalarField2D::new(nx, ny, dx, dy, y)?)
}

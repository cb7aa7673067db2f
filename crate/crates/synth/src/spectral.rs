//! Shared FFT machinery: filter complex white noise by the square root
//! of a spectral density and return the real part of the inverse
//! transform. Wavenumbers are integer cycles per domain period, with
//! the usual wraparound for the upper half of the spectrum.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use lddim_autodiff::rng::standard_normal;

/// Integer frequency index with wraparound: 0, 1, ..., n/2, -(n/2-1), ..., -1.
#[inline]
pub fn freq_index(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// `real(IFFT(sqrt(S(kx, ky)) * FFT(xi)))` with complex white noise xi.
///
/// `density` receives cycles-per-domain frequency indices. Uses the
/// unnormalized rustfft transforms with an explicit 1/N on the inverse.
pub fn filtered_noise(
    nx: usize,
    ny: usize,
    rng: &mut ChaCha8Rng,
    density: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let n = nx * ny;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
        .collect();

    let mut planner = FftPlanner::new();
    fft2(&mut buf, nx, ny, &mut planner, false);
    for j in 0..ny {
        let ky = freq_index(j, ny);
        for i in 0..nx {
            let kx = freq_index(i, nx);
            buf[j * nx + i] *= density(kx, ky).sqrt();
        }
    }
    fft2(&mut buf, nx, ny, &mut planner, true);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Row-column 2-D transform in place.
fn fft2(buf: &mut [Complex64], nx: usize, ny: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let fx = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for row in buf.chunks_exact_mut(nx) {
        fx.process(row);
    }
    let fy = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = buf[j * nx + i];
        }
        fy.process(&mut col);
        for j in 0..ny {
            buf[j * nx + i] = col[j];
        }
    }
}

//! Field-to-field error measures: relative L2, mean-corrected relative
//! error, and windowed SSIM with a uniform window and replicate padding.

use lddim_fvm::ScalarField2D;

use crate::error::{MetricsError, Result};

fn check_grids(pred: &ScalarField2D, truth: &ScalarField2D) -> Result<()> {
    if !pred.same_grid(truth) {
        return Err(MetricsError::GridMismatch(format!(
            "{}x{} vs {}x{}",
            pred.nx, pred.ny, truth.nx, truth.ny
        )));
    }
    Ok(())
}

fn l2(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// ‖pred − truth‖₂ / ‖truth‖₂.
pub fn relative_l2(pred: &ScalarField2D, truth: &ScalarField2D) -> Result<f64> {
    check_grids(pred, truth)?;
    let denom = l2(truth.values().iter().copied());
    if denom == 0.0 {
        return Err(MetricsError::Degenerate("zero-norm truth".into()));
    }
    let num = l2(pred
        .values()
        .iter()
        .zip(truth.values())
        .map(|(p, t)| p - t));
    Ok(num / denom)
}

/// ‖pred − truth‖₂ / ‖truth − mean(truth)‖₂.
pub fn mean_corrected_relative(pred: &ScalarField2D, truth: &ScalarField2D) -> Result<f64> {
    check_grids(pred, truth)?;
    let mean = truth.values().iter().sum::<f64>() / truth.len() as f64;
    let denom = l2(truth.values().iter().map(|t| t - mean));
    if denom == 0.0 {
        return Err(MetricsError::Degenerate("constant truth".into()));
    }
    let num = l2(pred
        .values()
        .iter()
        .zip(truth.values())
        .map(|(p, t)| p - t));
    Ok(num / denom)
}

pub const SSIM_WINDOW: usize = 7;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean local structural similarity over every pixel-centred `window`
/// x `window` uniform window (stride 1, replicate padding).
pub fn ssim(
    p: &ScalarField2D,
    q: &ScalarField2D,
    window: usize,
    dynamic_range: f64,
) -> Result<f64> {
    check_grids(p, q)?;
    if dynamic_range <= 0.0 {
        return Err(MetricsError::InvalidParams(format!(
            "dynamic range {dynamic_range} must be positive"
        )));
    }
    if window == 0 || window % 2 == 0 {
        return Err(MetricsError::InvalidParams(format!(
            "window {window} must be odd and positive"
        )));
    }
    if window > p.nx || window > p.ny {
        return Err(MetricsError::InvalidParams(format!(
            "window {window} exceeds field {}x{}",
            p.nx, p.ny
        )));
    }
    let c1 = (SSIM_K1 * dynamic_range).powi(2);
    let c2 = (SSIM_K2 * dynamic_range).powi(2);
    let half = (window / 2) as isize;
    let n_win = (window * window) as f64;
    let (nx, ny) = (p.nx as isize, p.ny as isize);
    let clamp = |v: isize, n: isize| v.clamp(0, n - 1) as usize;

    let mut total = 0.0;
    for cj in 0..ny {
        for ci in 0..nx {
            let (mut sp, mut sq) = (0.0, 0.0);
            for dj in -half..=half {
                for di in -half..=half {
                    let i = clamp(ci + di, nx);
                    let j = clamp(cj + dj, ny);
                    sp += p.at(i, j);
                    sq += q.at(i, j);
                }
            }
            let mp = sp / n_win;
            let mq = sq / n_win;
            // second centred pass avoids cancellation on near-constant windows
            let (mut vp, mut vq, mut cov) = (0.0, 0.0, 0.0);
            for dj in -half..=half {
                for di in -half..=half {
                    let i = clamp(ci + di, nx);
                    let j = clamp(cj + dj, ny);
                    let a = p.at(i, j) - mp;
                    let b = q.at(i, j) - mq;
                    vp += a * a;
                    vq += b * b;
                    cov += a * b;
                }
            }
            vp /= n_win;
            vq /= n_win;
            cov /= n_win;
            total += (2.0 * mp * mq + c1) * (2.0 * cov + c2)
                / ((mp * mp + mq * mq + c1) * (vp + vq + c2));
        }
    }
    Ok(total / (p.len() as f64))
}

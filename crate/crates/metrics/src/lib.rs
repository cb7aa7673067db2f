//! Evaluation metrics for reconstructed conductivity and head fields:
//! relative L2 errors, a mean-corrected variant, windowed SSIM, Sobel
//! edge maps, and Fréchet / kernel distances over fixed seeded feature
//! embeddings.

pub mod dist;
pub mod embed;
pub mod error;
pub mod pointwise;

pub use dist::{fid, fid_with_shrinkage, kid};
pub use embed::{embed, sobel_edges, FeatureEmbedding, EMBED_DIM};
pub use error::{MetricsError, Result};
pub use pointwise::{mean_corrected_relative, relative_l2, ssim, SSIM_K1, SSIM_K2, SSIM_WINDOW};

use lddim_fvm::ScalarField2D;

/// Summary of one reconstruction run. Conductivity errors are computed
/// on the fields as given; `evaluated_in_log` records whether the caller
/// supplied ln-K fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBundle {
    pub eps_k: f64,
    pub eps_h: f64,
    pub eps_k_tilde: f64,
    pub ssim: f64,
    pub evaluated_in_log: bool,
}

impl MetricsBundle {
    pub fn compute(
        k_hat: &ScalarField2D,
        k_truth: &ScalarField2D,
        h_hat: &ScalarField2D,
        h_truth: &ScalarField2D,
        evaluated_in_log: bool,
    ) -> Result<Self> {
        let lo = k_truth.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = k_truth
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if range <= 0.0 {
            return Err(MetricsError::Degenerate(
                "constant truth has no dynamic range".into(),
            ));
        }
        Ok(MetricsBundle {
            eps_k: relative_l2(k_hat, k_truth)?,
            eps_h: relative_l2(h_hat, h_truth)?,
            eps_k_tilde: mean_corrected_relative(k_hat, k_truth)?,
            ssim: ssim(k_hat, k_truth, SSIM_WINDOW, range)?,
            evaluated_in_log,
        })
    }
}

//! Inversion configuration.

use crate::error::{InversionError, Result};

/// Which generative parameterization the latent variable feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// z_T through the DDIM chain, then the decoder.
    LatentDiffusion,
    /// z_0 through the decoder only.
    VaeOnly,
    /// One normalized ln-K value per cell, no learned prior.
    PixelSpace,
}

impl PriorMode {
    pub fn name(self) -> &'static str {
        match self {
            PriorMode::LatentDiffusion => "latent-diffusion",
            PriorMode::VaeOnly => "vae-only",
            PriorMode::PixelSpace => "pixel-space",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "latent-diffusion" => Ok(PriorMode::LatentDiffusion),
            "vae-only" => Ok(PriorMode::VaeOnly),
            "pixel-space" => Ok(PriorMode::PixelSpace),
            other => Err(InversionError::InvalidConfig(format!(
                "unknown prior mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    /// Latent regularization weight.
    pub beta: f64,
    /// Learning rate.
    pub eta: f64,
    pub max_iter: usize,
    /// DDIM steps of the chain in latent-diffusion mode.
    pub ddim_steps: usize,
    pub prior_mode: PriorMode,
    pub seed: u64,
    /// Weight of the optional ln-K misfit at conductivity observations.
    pub k_obs_weight: Option<f64>,
    /// Adam on the latent (default); plain gradient descent otherwise.
    pub use_adam: bool,
    /// Smoothing weight on neighbour differences, pixel-space mode only.
    pub tikhonov: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            beta: 1e-3,
            eta: 1e-2,
            max_iter: 500,
            ddim_steps: 20,
            prior_mode: PriorMode::LatentDiffusion,
            seed: 0,
            k_obs_weight: None,
            use_adam: true,
            tikhonov: 0.0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta < 0.0 {
            return Err(InversionError::InvalidConfig(format!(
                "beta {} must be non-negative",
                self.beta
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(InversionError::InvalidConfig(format!(
                "eta {} must be finite and non-negative",
                self.eta
            )));
        }
        if self.max_iter == 0 {
            return Err(InversionError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.prior_mode == PriorMode::LatentDiffusion && self.ddim_steps == 0 {
            return Err(InversionError::InvalidConfig("ddim_steps must be >= 1".into()));
        }
        if self.tikhonov < 0.0 || matches!(self.k_obs_weight, Some(w) if w < 0.0) {
            return Err(InversionError::InvalidConfig(
                "penalty weights must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

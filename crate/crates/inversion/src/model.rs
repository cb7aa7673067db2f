//! The frozen generative components an inversion run draws on, plus the
//! grid geometry the decoded conductivity lives on.

use lddim_prior::{LatentStats, NoiseSchedule, Normalizer, UNet, Vae};

use crate::config::PriorMode;
use crate::error::{InversionError, Result};

/// Trained (and frozen) prior components. Which fields must be present
/// depends on the prior mode; `require_*` accessors enforce that.
pub struct PriorModel {
    pub vae: Option<Vae>,
    pub unet: Option<UNet>,
    pub norm: Normalizer,
    pub sched: Option<NoiseSchedule>,
    /// Channel statistics mapping the DDIM chain's output back to
    /// decoder space.
    pub latent_stats: LatentStats,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl PriorModel {
    pub fn latent_diffusion(
        vae: Vae,
        unet: UNet,
        norm: Normalizer,
        sched: NoiseSchedule,
        latent_stats: LatentStats,
        dx: f64,
        dy: f64,
    ) -> Self {
        let (nx, ny) = (vae.cfg.nx, vae.cfg.ny);
        PriorModel {
            vae: Some(vae),
            unet: Some(unet),
            norm,
            sched: Some(sched),
            latent_stats,
            nx,
            ny,
            dx,
            dy,
        }
    }

    pub fn vae_only(vae: Vae, norm: Normalizer, dx: f64, dy: f64) -> Self {
        let (nx, ny) = (vae.cfg.nx, vae.cfg.ny);
        PriorModel {
            vae: Some(vae),
            unet: None,
            norm,
            sched: None,
            latent_stats: LatentStats::identity(0),
            nx,
            ny,
            dx,
            dy,
        }
    }

    pub fn pixel_space(norm: Normalizer, nx: usize, ny: usize, dx: f64, dy: f64) -> Self {
        PriorModel {
            vae: None,
            unet: None,
            norm,
            sched: None,
            latent_stats: LatentStats::identity(0),
            nx,
            ny,
            dx,
            dy,
        }
    }

    pub fn require_vae(&self, mode: PriorMode) -> Result<&Vae> {
        self.vae
            .as_ref()
            .ok_or_else(|| InversionError::MissingComponent(mode.name().into(), "vae".into()))
    }

    pub fn require_unet(&self, mode: PriorMode) -> Result<&UNet> {
        self.unet
            .as_ref()
            .ok_or_else(|| InversionError::MissingComponent(mode.name().into(), "unet".into()))
    }

    pub fn require_sched(&self, mode: PriorMode) -> Result<&NoiseSchedule> {
        self.sched
            .as_ref()
            .ok_or_else(|| InversionError::MissingComponent(mode.name().into(), "schedule".into()))
    }

    /// Shape of the optimized latent for the given mode.
    pub fn latent_shape(&self, mode: PriorMode) -> Result<Vec<usize>> {
        match mode {
            PriorMode::LatentDiffusion | PriorMode::VaeOnly => {
                let (c, h, w) = self.require_vae(mode)?.cfg.latent_shape();
                Ok(vec![1, c, h, w])
            }
            PriorMode::PixelSpace => Ok(vec![1, 1, self.ny, self.nx]),
        }
    }
}

//! Small U-Net noise predictor on the latent grid: one stride-2 down
//! level, a middle block, a transpose-conv up level with a skip
//! concatenation, and a zero-initialized output head so the untrained
//! prediction is exactly zero. Each block receives a sinusoidal
//! timestep embedding projected to a per-channel bias.

use std::path::Path;

use lddim_autodiff::nn::{timestep_embedding, Conv2dLayer, ConvT2dLayer, DenseLayer};
use lddim_autodiff::rng::stream;
use lddim_autodiff::{checkpoint, concat, ParameterSet, Var};

use crate::error::{PriorError, Result};

pub const TIME_EMBED_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UNetConfig {
    pub latent_channels: usize,
    pub latent_h: usize,
    pub latent_w: usize,
    pub base_channels: usize,
}

impl UNetConfig {
    fn validate(&self) -> Result<()> {
        if self.latent_h % 2 != 0 || self.latent_w % 2 != 0 {
            return Err(PriorError::InvalidConfig(format!(
                "latent extent {}x{} must be even for the down level",
                self.latent_h, self.latent_w
            )));
        }
        if self.latent_channels == 0 || self.base_channels == 0 {
            return Err(PriorError::InvalidConfig("channel counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct UNet {
    pub cfg: UNetConfig,
    pub params: ParameterSet,
    in_conv: Conv2dLayer,
    t_in: DenseLayer,
    down: Conv2dLayer,
    t_down: DenseLayer,
    mid: Conv2dLayer,
    t_mid: DenseLayer,
    up: ConvT2dLayer,
    out_conv: Conv2dLayer,
}

impl UNet {
    pub fn new(cfg: UNetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream(seed, "unet-init");
        let mut ps = ParameterSet::new();
        let c0 = cfg.base_channels;
        let c1 = 2 * cfg.base_channels;

        let in_conv = Conv2dLayer::new(&mut ps, "in", cfg.latent_channels, c0, 3, 1, 1, &mut rng);
        let t_in = DenseLayer::new(&mut ps, "t_in", TIME_EMBED_DIM, c0, &mut rng);
        let down = Conv2dLayer::new(&mut ps, "down", c0, c1, 3, 2, 1, &mut rng);
        let t_down = DenseLayer::new(&mut ps, "t_down", TIME_EMBED_DIM, c1, &mut rng);
        let mid = Conv2dLayer::new(&mut ps, "mid", c1, c1, 3, 1, 1, &mut rng);
        let t_mid = DenseLayer::new(&mut ps, "t_mid", TIME_EMBED_DIM, c1, &mut rng);
        let up = ConvT2dLayer::new(&mut ps, "up", c1, c0, 4, 2, 1, &mut rng);
        let out_conv = Conv2dLayer::new_zeroed(&mut ps, "out", 2 * c0, cfg.latent_channels, 3, 1, 1);

        Ok(Self {
            cfg,
            params: ps,
            in_conv,
            t_in,
            down,
            t_down,
            mid,
            t_mid,
            up,
            out_conv,
        })
    }

    pub fn from_checkpoint(cfg: UNetConfig, path: &Path) -> Result<Self> {
        let mut net = Self::new(cfg, 0)?;
        let loaded = checkpoint::load(path)?;
        if loaded.names() != net.params.names() {
            return Err(PriorError::InvalidConfig(format!(
                "checkpoint at {} does not match the configured architecture",
                path.display()
            )));
        }
        net.params = loaded;
        Ok(net)
    }

    /// Predicted noise for `z_t` at timestep `t`.
    pub fn predict(&self, z_t: &Var, t: usize, params: &[Var]) -> Result<Var> {
        let shape = z_t.shape();
        if shape.len() != 4
            || shape[1] != self.cfg.latent_channels
            || shape[2] != self.cfg.latent_h
            || shape[3] != self.cfg.latent_w
        {
            return Err(PriorError::ShapeMismatch(format!(
                "denoiser input {shape:?}, expected [B, {}, {}, {}]",
                self.cfg.latent_channels, self.cfg.latent_h, self.cfg.latent_w
            )));
        }
        let tape = z_t.tape();
        let emb = tape.leaf(timestep_embedding(t, TIME_EMBED_DIM));

        let bias = |layer: &DenseLayer, cout: usize| -> Result<Var> {
            Ok(layer.forward(&emb, params)?.reshape(&[cout])?)
        };
        let c0 = self.cfg.base_channels;
        let c1 = 2 * c0;

        let h1 = self
            .in_conv
            .forward(z_t, params)?
            .add_chan_bias(&bias(&self.t_in, c0)?)?
            .silu()?;
        let h2 = self
            .down
            .forward(&h1, params)?
            .add_chan_bias(&bias(&self.t_down, c1)?)?
            .silu()?;
        let h3 = self
            .mid
            .forward(&h2, params)?
            .add_chan_bias(&bias(&self.t_mid, c1)?)?
            .silu()?;
        let h4 = self.up.forward(&h3, params)?.silu()?;
        let cat = concat(&[&h4, &h1], 1)?;
        Ok(self.out_conv.forward(&cat, params)?)
    }
}

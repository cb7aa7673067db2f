//! Convolutional VAE: stride-2 encoder with paired 1x1 heads for the
//! latent mean and log-variance, and a mirrored transpose-conv decoder.
//! Both heads start at zero, so an untrained encoder outputs
//! z_mu = 0 and z_sigma = 1.

use std::path::Path;

use lddim_autodiff::nn::{Conv2dLayer, ConvT2dLayer};
use lddim_autodiff::rng::stream;
use lddim_autodiff::{checkpoint, ParameterSet, Tape, Tensor, Var};

use crate::error::{PriorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaeConfig {
    pub nx: usize,
    pub ny: usize,
    /// Number of stride-2 encoder blocks; each halves the resolution.
    pub depth: usize,
    pub base_channels: usize,
    pub latent_channels: usize,
}

impl VaeConfig {
    pub fn latent_shape(&self) -> (usize, usize, usize) {
        (
            self.latent_channels,
            self.ny >> self.depth,
            self.nx >> self.depth,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(PriorError::InvalidConfig("depth must be at least 1".into()));
        }
        if self.nx % (1 << self.depth) != 0 || self.ny % (1 << self.depth) != 0 {
            return Err(PriorError::InvalidConfig(format!(
                "resolution {}x{} not divisible by 2^{}",
                self.nx, self.ny, self.depth
            )));
        }
        if self.base_channels == 0 || self.latent_channels == 0 {
            return Err(PriorError::InvalidConfig("channel counts must be positive".into()));
        }
        Ok(())
    }

    fn channels(&self, level: usize) -> usize {
        (self.base_channels << level).min(64)
    }
}

#[derive(Debug, Clone)]
pub struct Vae {
    pub cfg: VaeConfig,
    pub params: ParameterSet,
    enc: Vec<Conv2dLayer>,
    mu_head: Conv2dLayer,
    logvar_head: Conv2dLayer,
    dec_in: Conv2dLayer,
    dec_up: Vec<ConvT2dLayer>,
    dec_out: Conv2dLayer,
}

impl Vae {
    pub fn new(cfg: VaeConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream(seed, "vae-init");
        let mut ps = ParameterSet::new();

        let mut enc = Vec::new();
        let mut cin = 1;
        for level in 0..cfg.depth {
            let cout = cfg.channels(level);
            enc.push(Conv2dLayer::new(
                &mut ps,
                &format!("enc{level}"),
                cin,
                cout,
                3,
                2,
                1,
                &mut rng,
            ));
            cin = cout;
        }
        let mu_head = Conv2dLayer::new_zeroed(&mut ps, "mu", cin, cfg.latent_channels, 1, 1, 0);
        let logvar_head =
            Conv2dLayer::new_zeroed(&mut ps, "logvar", cin, cfg.latent_channels, 1, 1, 0);

        let dec_in = Conv2dLayer::new(&mut ps, "dec_in", cfg.latent_channels, cin, 3, 1, 1, &mut rng);
        let mut dec_up = Vec::new();
        for level in (0..cfg.depth).rev() {
            let cout = if level == 0 {
                cfg.base_channels
            } else {
                cfg.channels(level - 1)
            };
            dec_up.push(ConvT2dLayer::new(
                &mut ps,
                &format!("dec_up{level}"),
                cin,
                cout,
                4,
                2,
                1,
                &mut rng,
            ));
            cin = cout;
        }
        let dec_out = Conv2dLayer::new(&mut ps, "dec_out", cin, 1, 3, 1, 1, &mut rng);

        Ok(Self {
            cfg,
            params: ps,
            enc,
            mu_head,
            logvar_head,
            dec_in,
            dec_up,
            dec_out,
        })
    }

    pub fn from_checkpoint(cfg: VaeConfig, path: &Path) -> Result<Self> {
        let mut vae = Self::new(cfg, 0)?;
        let loaded = checkpoint::load(path)?;
        if loaded.names() != vae.params.names() {
            return Err(PriorError::InvalidConfig(format!(
                "checkpoint at {} does not match the configured architecture",
                path.display()
            )));
        }
        vae.params = loaded;
        Ok(vae)
    }

    /// Encoder: returns (z_mu, z_logvar) of the configured latent shape.
    pub fn encode(&self, x: &Var, params: &[Var]) -> Result<(Var, Var)> {
        let shape = x.shape();
        if shape.len() != 4 || shape[1] != 1 || shape[2] != self.cfg.ny || shape[3] != self.cfg.nx {
            return Err(PriorError::ShapeMismatch(format!(
                "encoder input {shape:?}, expected [B, 1, {}, {}]",
                self.cfg.ny, self.cfg.nx
            )));
        }
        let mut h = x.clone();
        for layer in &self.enc {
            h = layer.forward(&h, params)?.silu()?;
        }
        let mu = self.mu_head.forward(&h, params)?;
        let logvar = self.logvar_head.forward(&h, params)?;
        Ok((mu, logvar))
    }

    pub fn decode(&self, z: &Var, params: &[Var]) -> Result<Var> {
        let (c, lh, lw) = self.cfg.latent_shape();
        let shape = z.shape();
        if shape.len() != 4 || shape[1] != c || shape[2] != lh || shape[3] != lw {
            return Err(PriorError::ShapeMismatch(format!(
                "decoder input {shape:?}, expected [B, {c}, {lh}, {lw}]"
            )));
        }
        let mut h = self.dec_in.forward(z, params)?.silu()?;
        for layer in &self.dec_up {
            h = layer.forward(&h, params)?.silu()?;
        }
        Ok(self.dec_out.forward(&h, params)?)
    }

    /// Encode off-tape: plain (mu, logvar) tensors.
    pub fn encode_tensor(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let tape = Tape::new();
        let bound = self.params.bind(&tape);
        let xv = tape.leaf(x.clone());
        let (mu, logvar) = self.encode(&xv, &bound)?;
        Ok((mu.value(), logvar.value()))
    }

    /// Decode off-tape.
    pub fn decode_tensor(&self, z: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let bound = self.params.bind(&tape);
        let zv = tape.leaf(z.clone());
        Ok(self.decode(&zv, &bound)?.value())
    }
}

/// sigma = exp(logvar / 2); strictly positive by construction.
pub fn sigma_from_logvar(logvar: &Var) -> Result<Var> {
    Ok(logvar.scale(0.5)?.exp()?)
}

/// z0 = z_mu + z_sigma * eps; the noise enters as a constant leaf.
pub fn reparameterize(z_mu: &Var, z_sigma: &Var, eps: &Tensor) -> Result<Var> {
    let eps_leaf = z_mu.tape().leaf(eps.clone());
    Ok(z_mu.add(&z_sigma.mul(&eps_leaf)?)?)
}

/// Closed-form KL(N(mu, diag sigma^2) || N(0, I)):
/// 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2).
pub fn gaussian_kl(z_mu: &Var, z_logvar: &Var) -> Result<Var> {
    let mu2 = z_mu.mul(z_mu)?;
    let sigma2 = z_logvar.exp()?;
    let term = mu2.add(&sigma2)?.add_scalar(-1.0)?.sub(z_logvar)?;
    Ok(term.sum()?.scale(0.5)?)
}

/// L1 reconstruction plus lambda_kl-weighted Gaussian KL.
pub fn vae_loss(
    x: &Var,
    x_hat: &Var,
    z_mu: &Var,
    z_logvar: &Var,
    lambda_kl: f64,
) -> Result<Var> {
    let recon = x.sub(x_hat)?.abs()?.sum()?;
    let kl = gaussian_kl(z_mu, z_logvar)?;
    Ok(recon.add(&kl.scale(lambda_kl)?)?)
}

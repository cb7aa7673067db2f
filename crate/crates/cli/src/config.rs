//! Key-value run configuration shared by every subcommand.

use anyhow::{bail, Context, Result};

use lddim_inversion::{InversionConfig, PriorMode, SweepKind};
use lddim_prior::TrainConfig;
use lddim_synth::{DatasetKind, DOMAIN_SIZE};

/// Full configuration; every key has a default and unknown keys are
/// rejected by name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // grid and dataset
    pub nx: usize,
    pub ny: usize,
    pub kind: DatasetKind,
    pub n_total: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    // boundary conditions
    pub bc_left: f64,
    pub bc_right: f64,
    // prior training
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lambda_kl: f64,
    pub t_steps: usize,
    pub depth: usize,
    pub base_channels: usize,
    pub latent_channels: usize,
    pub sample_steps: usize,
    // inversion
    pub beta: f64,
    pub eta: f64,
    pub max_iter: usize,
    pub invert_steps: usize,
    pub prior_mode: PriorMode,
    pub obs_layout: usize,
    pub use_adam: bool,
    pub tikhonov: f64,
    pub k_obs_weight: Option<f64>,
    // fallback normalizer range when no checkpoint supplies one
    pub lnk_min: f64,
    pub lnk_max: f64,
    // sweeps and evaluation
    pub sweep_kind: SweepKind,
    pub n_seeds: usize,
    pub workers: usize,
    pub extractor_seed: u64,
    // master seed
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nx: 32,
            ny: 32,
            kind: DatasetKind::Gaussian,
            n_total: 2000,
            n_train: 1400,
            n_val: 400,
            n_test: 200,
            bc_left: 1.0,
            bc_right: 0.0,
            lr: 1e-3,
            epochs: 30,
            batch: 16,
            lambda_kl: 1e-4,
            t_steps: 1000,
            depth: 3,
            base_channels: 16,
            latent_channels: 4,
            sample_steps: 50,
            beta: 1e-3,
            eta: 1e-2,
            max_iter: 500,
            invert_steps: 20,
            prior_mode: PriorMode::LatentDiffusion,
            obs_layout: 16,
            use_adam: true,
            tikhonov: 0.0,
            k_obs_weight: None,
            lnk_min: -3.0,
            lnk_max: 0.0,
            sweep_kind: SweepKind::ObservationDensity,
            n_seeds: 5,
            workers: 0,
            extractor_seed: 0,
            seed: 0,
        }
    }
}

/// `key default description` for every recognized key.
pub const KEY_HELP: &[(&str, &str, &str)] = &[
    ("nx", "32", "grid cells in x"),
    ("ny", "32", "grid cells in y"),
    ("kind", "gaussian", "dataset family: gaussian | bimaterial"),
    ("n_total", "2000", "total dataset size"),
    ("n_train", "1400", "training split size"),
    ("n_val", "400", "validation split size"),
    ("n_test", "200", "test split size"),
    ("bc_left", "1", "Dirichlet head on the left boundary"),
    ("bc_right", "0", "Dirichlet head on the right boundary"),
    ("lr", "0.001", "training learning rate"),
    ("epochs", "30", "training epochs per stage"),
    ("batch", "16", "training batch size"),
    ("lambda_kl", "0.0001", "KL weight of the VAE loss"),
    ("t_steps", "1000", "diffusion timesteps T"),
    ("depth", "3", "encoder/decoder stride-2 levels"),
    ("base_channels", "16", "VAE base channel count"),
    ("latent_channels", "4", "latent channels"),
    ("sample_steps", "50", "DDIM steps when sampling"),
    ("beta", "0.001", "latent regularization weight"),
    ("eta", "0.01", "inversion learning rate"),
    ("max_iter", "500", "inversion iterations"),
    ("invert_steps", "20", "DDIM steps during inversion"),
    (
        "prior_mode",
        "latent-diffusion",
        "latent-diffusion | vae-only | pixel-space",
    ),
    ("obs_layout", "16", "m for the m x m observation grid"),
    ("use_adam", "true", "Adam on the latent (false: plain descent)"),
    ("tikhonov", "0", "pixel-space smoothing weight"),
    ("k_obs_weight", "unset", "weight of ln-K observations (hybrid mode)"),
    ("lnk_min", "-3", "fallback normalizer ln-K minimum"),
    ("lnk_max", "0", "fallback normalizer ln-K maximum"),
    (
        "sweep_kind",
        "observation-density",
        "seed-sensitivity | observation-density",
    ),
    ("n_seeds", "5", "seeds per sweep"),
    ("workers", "0", "sweep worker threads (0: auto)"),
    ("extractor_seed", "0", "feature-extractor seed for FID/KID"),
    ("seed", "0", "master seed"),
];

/// Rendered key table for `--help`.
pub fn key_help_text() -> String {
    let mut out = String::from("Config keys (key = value per line, # comments):\n");
    for (key, default, desc) in KEY_HELP {
        out.push_str(&format!("  {key:<16} default {default:<20} {desc}\n"));
    }
    out
}

impl RunConfig {
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => match line.split_once(char::is_whitespace) {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => bail!("line {}: missing value in {line:?}", lineno + 1),
                },
            };
            cfg.set(key, value)
                .with_context(|| format!("line {}", lineno + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&std::path::Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::from_kv_text(&text)
            }
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse()
                .map_err(|e| anyhow::anyhow!("key {key}: bad value {v:?} ({e})"))
        }
        match key {
            "nx" => self.nx = num(key, value)?,
            "ny" => self.ny = num(key, value)?,
            "kind" => self.kind = DatasetKind::parse(value)?,
            "n_total" => self.n_total = num(key, value)?,
            "n_train" => self.n_train = num(key, value)?,
            "n_val" => self.n_val = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "bc_left" => self.bc_left = num(key, value)?,
            "bc_right" => self.bc_right = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "lambda_kl" => self.lambda_kl = num(key, value)?,
            "t_steps" => self.t_steps = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "base_channels" => self.base_channels = num(key, value)?,
            "latent_channels" => self.latent_channels = num(key, value)?,
            "sample_steps" => self.sample_steps = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "invert_steps" => self.invert_steps = num(key, value)?,
            "prior_mode" => self.prior_mode = PriorMode::parse(value)?,
            "obs_layout" => self.obs_layout = num(key, value)?,
            "use_adam" => self.use_adam = num(key, value)?,
            "tikhonov" => self.tikhonov = num(key, value)?,
            "k_obs_weight" => self.k_obs_weight = Some(num(key, value)?),
            "lnk_min" => self.lnk_min = num(key, value)?,
            "lnk_max" => self.lnk_max = num(key, value)?,
            "sweep_kind" => {
                self.sweep_kind = match value {
                    "seed-sensitivity" => SweepKind::SeedSensitivity,
                    "observation-density" => SweepKind::ObservationDensity,
                    other => bail!("key sweep_kind: unknown value {other:?}"),
                }
            }
            "n_seeds" => self.n_seeds = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "extractor_seed" => self.extractor_seed = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            bail!("grid must be non-empty");
        }
        if self.n_train + self.n_val + self.n_test != self.n_total {
            bail!(
                "splits {}+{}+{} do not sum to n_total {}",
                self.n_train,
                self.n_val,
                self.n_test,
                self.n_total
            );
        }
        if self.lnk_max <= self.lnk_min {
            bail!("lnk_max must exceed lnk_min");
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        DOMAIN_SIZE / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        DOMAIN_SIZE / self.ny as f64
    }

    /// Training hyperparameters with a per-stage seed.
    pub fn train_config(&self, stage_seed: u64) -> Result<TrainConfig> {
        if self.nx != self.ny {
            bail!("training requires a square grid, got {}x{}", self.nx, self.ny);
        }
        Ok(TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch: self.batch,
            lambda_kl: self.lambda_kl,
            t_steps: self.t_steps,
            resolution: self.nx,
            depth: self.depth,
            base_channels: self.base_channels,
            latent_channels: self.latent_channels,
            sample_steps: self.sample_steps,
            invert_steps: self.invert_steps,
            seed: stage_seed,
        })
    }

    pub fn inversion_config(&self, stage_seed: u64) -> InversionConfig {
        InversionConfig {
            beta: self.beta,
            eta: self.eta,
            max_iter: self.max_iter,
            ddim_steps: self.invert_steps,
            prior_mode: self.prior_mode,
            seed: stage_seed,
            k_obs_weight: self.k_obs_weight,
            use_adam: self.use_adam,
            tikhonov: self.tikhonov,
        }
    }
}

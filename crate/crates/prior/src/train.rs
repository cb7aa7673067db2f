//! Two-stage training: the VAE first, then the latent denoiser against
//! latents produced by the frozen VAE. Every stage derives its random
//! streams from (seed, stage label, epoch), so training can resume from
//! a checkpoint and reproduce the remaining epochs bitwise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use lddim_autodiff::rng::indexed_stream;
use lddim_autodiff::{checkpoint, AdError, AdamConfig, Tape, Tensor};
use lddim_fvm::ScalarField2D;

use crate::diffusion::{diffusion_loss, noise_like};
use crate::error::{PriorError, Result};
use crate::normalize::{LatentStats, Normalizer};
use crate::schedule::make_schedule;
use crate::unet::{UNet, UNetConfig};
use crate::vae::{reparameterize, sigma_from_logvar, vae_loss, Vae, VaeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lambda_kl: f64,
    pub t_steps: usize,
    pub resolution: usize,
    pub depth: usize,
    pub base_channels: usize,
    pub latent_channels: usize,
    pub sample_steps: usize,
    pub invert_steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 30,
            batch: 16,
            lambda_kl: 1e-4,
            t_steps: 1000,
            resolution: 32,
            depth: 3,
            base_channels: 16,
            latent_channels: 4,
            sample_steps: 50,
            invert_steps: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Smallest end-to-end configuration: 8x8 fields, 2x4x4 latent,
    /// 5-step DDIM chains.
    pub fn tiny() -> Self {
        Self {
            epochs: 5,
            batch: 4,
            t_steps: 50,
            resolution: 8,
            depth: 1,
            base_channels: 8,
            latent_channels: 2,
            sample_steps: 5,
            invert_steps: 5,
            ..Self::default()
        }
    }

    pub fn vae_config(&self) -> VaeConfig {
        VaeConfig {
            nx: self.resolution,
            ny: self.resolution,
            depth: self.depth,
            base_channels: self.base_channels,
            latent_channels: self.latent_channels,
        }
    }

    pub fn unet_config(&self) -> UNetConfig {
        let (c, h, w) = self.vae_config().latent_shape();
        UNetConfig {
            latent_channels: c,
            latent_h: h,
            latent_w: w,
            base_channels: 32,
        }
    }

    /// Parse a `key value`-per-line (or `key=value`) config body.
    /// Unknown keys are rejected.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| {
                    PriorError::InvalidConfig(format!("line {}: '{raw}'", lineno + 1))
                })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: std::num::ParseFloatError| {
                PriorError::InvalidConfig(format!("bad value for {key}: {e}"))
            };
            let bad_int = |e: std::num::ParseIntError| {
                PriorError::InvalidConfig(format!("bad value for {key}: {e}"))
            };
            match key {
                "lr" => cfg.lr = value.parse().map_err(bad)?,
                "epochs" => cfg.epochs = value.parse().map_err(bad_int)?,
                "batch" => cfg.batch = value.parse().map_err(bad_int)?,
                "lambda_kl" => cfg.lambda_kl = value.parse().map_err(bad)?,
                "T" => cfg.t_steps = value.parse().map_err(bad_int)?,
                "resolution" => cfg.resolution = value.parse().map_err(bad_int)?,
                "depth" => cfg.depth = value.parse().map_err(bad_int)?,
                "base_channels" => cfg.base_channels = value.parse().map_err(bad_int)?,
                "latent_channels" => cfg.latent_channels = value.parse().map_err(bad_int)?,
                "sample_steps" => cfg.sample_steps = value.parse().map_err(bad_int)?,
                "invert_steps" => cfg.invert_steps = value.parse().map_err(bad_int)?,
                "seed" => cfg.seed = value.parse().map_err(bad_int)?,
                other => {
                    return Err(PriorError::InvalidConfig(format!(
                        "unknown config key '{other}'"
                    )))
                }
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub fn write_log_csv(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for e in log {
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn fields_to_tensors(norm: &Normalizer, fields: &[ScalarField2D]) -> Vec<Tensor> {
    fields.iter().map(|f| norm.to_tensor(f)).collect()
}

fn stack_batch(samples: &[&Tensor]) -> Tensor {
    let mut shape = samples[0].shape().to_vec();
    shape[0] = samples.len();
    let mut data = Vec::with_capacity(shape.iter().product());
    for s in samples {
        data.extend_from_slice(s.data());
    }
    Tensor::new(shape, data).unwrap()
}

pub struct VaeTrainOutput {
    pub vae: Vae,
    pub norm: Normalizer,
    pub log: Vec<EpochLog>,
    pub checkpoint: PathBuf,
}

/// One VAE pass over a batch; returns the scalar loss and, when
/// `update` is set, applies an Adam step.
fn vae_batch_loss(
    vae: &mut Vae,
    batch: &Tensor,
    eps: &Tensor,
    lambda_kl: f64,
    adam: Option<&AdamConfig>,
) -> Result<f64> {
    let tape = Tape::new();
    let bound = vae.params.bind(&tape);
    let x = tape.leaf(batch.clone());
    let (mu, logvar) = vae.encode(&x, &bound)?;
    let sigma = sigma_from_logvar(&logvar)?;
    let z = reparameterize(&mu, &sigma, eps)?;
    let x_hat = vae.decode(&z, &bound)?;
    let b = batch.shape()[0] as f64;
    let loss = vae_loss(&x, &x_hat, &mu, &logvar, lambda_kl)?.scale(1.0 / b)?;
    let value = loss.value().data()[0];
    if let Some(cfg) = adam {
        let grads = tape.backward(&loss)?;
        let collected = vae.params.collect_grads(&grads, &bound);
        vae.params.adam_step(&collected, cfg)?;
    }
    Ok(value)
}

/// Train epochs `start_epoch..end_epoch`, checkpointing after each one.
#[allow(clippy::too_many_arguments)]
pub fn train_vae_epochs(
    vae: &mut Vae,
    norm: &Normalizer,
    train: &[Tensor],
    val: &[Tensor],
    cfg: &TrainConfig,
    out_dir: &Path,
    start_epoch: usize,
    end_epoch: usize,
    log: &mut Vec<EpochLog>,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let ckpt = out_dir.join("vae.ldad");
    norm.save(&out_dir.join("normalizer.ldad"))?;
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let (c, lh, lw) = cfg.vae_config().latent_shape();

    for epoch in start_epoch..end_epoch {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut indexed_stream(cfg.seed, "vae-shuffle", epoch as u64));
        let mut eps_rng = indexed_stream(cfg.seed, "vae-eps", epoch as u64);

        let mut total = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let samples: Vec<&Tensor> = chunk.iter().map(|&i| &train[i]).collect();
            let batch = stack_batch(&samples);
            let eps = noise_like(&[chunk.len(), c, lh, lw], &mut eps_rng);
            let value = vae_batch_loss(vae, &batch, &eps, cfg.lambda_kl, Some(&adam))
                .map_err(|e| diverged(e, epoch, &ckpt))?;
            if !value.is_finite() {
                return Err(PriorError::TrainingDiverged {
                    epoch,
                    checkpoint: ckpt.display().to_string(),
                });
            }
            total += value * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = total / seen.max(1) as f64;

        let mut val_rng = indexed_stream(cfg.seed, "vae-val-eps", epoch as u64);
        let mut val_total = 0.0;
        for sample in val {
            let eps = noise_like(&[1, c, lh, lw], &mut val_rng);
            val_total += vae_batch_loss(vae, sample, &eps, cfg.lambda_kl, None)?;
        }
        let val_loss = if val.is_empty() {
            f64::NAN
        } else {
            val_total / val.len() as f64
        };

        checkpoint::save(&vae.params, &ckpt)?;
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
        write_log_csv(&out_dir.join("vae_log.csv"), log)?;
    }
    Ok(ckpt)
}

fn diverged(e: PriorError, epoch: usize, ckpt: &Path) -> PriorError {
    match e {
        PriorError::Ad(AdError::NanGradient(_)) | PriorError::Ad(AdError::NonFinite { .. }) => {
            PriorError::TrainingDiverged {
                epoch,
                checkpoint: ckpt.display().to_string(),
            }
        }
        other => other,
    }
}

pub fn train_vae(
    train_fields: &[ScalarField2D],
    val_fields: &[ScalarField2D],
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<VaeTrainOutput> {
    let norm = Normalizer::fit(train_fields)?;
    let mut vae = Vae::new(cfg.vae_config(), cfg.seed)?;
    let train = fields_to_tensors(&norm, train_fields);
    let val = fields_to_tensors(&norm, val_fields);
    let mut log = Vec::new();
    let checkpoint = train_vae_epochs(
        &mut vae,
        &norm,
        &train,
        &val,
        cfg,
        out_dir,
        0,
        cfg.epochs,
        &mut log,
    )?;
    Ok(VaeTrainOutput {
        vae,
        norm,
        log,
        checkpoint,
    })
}

pub fn save_latent_stats(path: &Path, stats: &LatentStats) -> Result<()> {
    stats.save(path)
}

pub fn load_latent_stats(path: &Path) -> Result<LatentStats> {
    LatentStats::load(path)
}

pub struct DiffusionTrainOutput {
    pub unet: UNet,
    /// Channel statistics of the training latents; diffusion operates
    /// on standardized latents.
    pub latent_stats: LatentStats,
    pub log: Vec<EpochLog>,
    pub checkpoint: PathBuf,
}

/// Latents for diffusion training, drawn through the frozen encoder
/// with a per-sample deterministic reparameterization noise.
pub fn encode_dataset(vae: &Vae, norm: &Normalizer, fields: &[ScalarField2D], seed: u64) -> Result<Vec<Tensor>> {
    let mut out = Vec::with_capacity(fields.len());
    for (i, f) in fields.iter().enumerate() {
        let x = norm.to_tensor(f);
        let (mu, logvar) = vae.encode_tensor(&x)?;
        let mut rng = indexed_stream(seed, "latent-eps", i as u64);
        let eps = noise_like(&mu.shape().to_vec(), &mut rng);
        let data: Vec<f64> = mu
            .data()
            .iter()
            .zip(logvar.data())
            .zip(eps.data())
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        out.push(Tensor::new(mu.shape().to_vec(), data).unwrap());
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn train_diffusion_epochs(
    unet: &mut UNet,
    train: &[Tensor],
    val: &[Tensor],
    cfg: &TrainConfig,
    out_dir: &Path,
    start_epoch: usize,
    end_epoch: usize,
    log: &mut Vec<EpochLog>,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let ckpt = out_dir.join("unet.ldad");
    let sched = make_schedule(cfg.t_steps)?;
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };

    for epoch in start_epoch..end_epoch {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut indexed_stream(cfg.seed, "diff-shuffle", epoch as u64));
        let mut rng = indexed_stream(cfg.seed, "diff-eps", epoch as u64);

        let mut total = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let batch: Vec<Tensor> = chunk.iter().map(|&i| train[i].clone()).collect();
            let tape = Tape::new();
            let bound = unet.params.bind(&tape);
            let loss = diffusion_loss(&tape, &batch, &sched, &mut rng, |z, t| {
                unet.predict(z, t, &bound)
            })
            .map_err(|e| diverged(e, epoch, &ckpt))?;
            let value = loss.value().data()[0];
            if !value.is_finite() {
                return Err(PriorError::TrainingDiverged {
                    epoch,
                    checkpoint: ckpt.display().to_string(),
                });
            }
            let grads = tape.backward(&loss).map_err(|e| diverged(e.into(), epoch, &ckpt))?;
            let collected = unet.params.collect_grads(&grads, &bound);
            unet.params
                .adam_step(&collected, &adam)
                .map_err(|e| diverged(e.into(), epoch, &ckpt))?;
            total += value * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = total / seen.max(1) as f64;

        let mut val_rng = indexed_stream(cfg.seed, "diff-val-eps", epoch as u64);
        let val_loss = if val.is_empty() {
            f64::NAN
        } else {
            let tape = Tape::new();
            let bound = unet.params.bind(&tape);
            let loss = diffusion_loss(&tape, val, &sched, &mut val_rng, |z, t| {
                unet.predict(z, t, &bound)
            })?;
            loss.value().data()[0]
        };

        checkpoint::save(&unet.params, &ckpt)?;
        log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
        write_log_csv(&out_dir.join("diffusion_log.csv"), log)?;
    }
    Ok(ckpt)
}

/// Stage two: the VAE is frozen; only encoder outputs (as constants)
/// reach the denoiser, so no gradient can touch VAE parameters.
pub fn train_diffusion(
    vae: &Vae,
    norm: &Normalizer,
    train_fields: &[ScalarField2D],
    val_fields: &[ScalarField2D],
    cfg: &TrainConfig,
    out_dir: &Path,
) -> Result<DiffusionTrainOutput> {
    let train = encode_dataset(vae, norm, train_fields, cfg.seed)?;
    let val = encode_dataset(vae, norm, val_fields, cfg.seed.wrapping_add(1))?;
    let latent_stats = LatentStats::fit(&train)?;
    let train = train
        .iter()
        .map(|z| latent_stats.standardize(z))
        .collect::<Result<Vec<_>>>()?;
    let val = val
        .iter()
        .map(|z| latent_stats.standardize(z))
        .collect::<Result<Vec<_>>>()?;
    save_latent_stats(&out_dir.join("latent_stats.ldad"), &latent_stats)?;
    let mut unet = UNet::new(cfg.unet_config(), cfg.seed)?;
    let mut log = Vec::new();
    let checkpoint = train_diffusion_epochs(
        &mut unet,
        &train,
        &val,
        cfg,
        out_dir,
        0,
        cfg.epochs,
        &mut log,
    )?;
    Ok(DiffusionTrainOutput {
        unet,
        latent_stats,
        log,
        checkpoint,
    })
}

//! Forward diffusion, the noise-matching training loss, and
//! deterministic DDIM updates, all sharing one alpha-bar-consistent
//! coefficient computation so the strided update recovers z0 exactly
//! under a perfect noise prediction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lddim_autodiff::rng::standard_normal;
use lddim_autodiff::{Tape, Tensor, Var};
use lddim_fvm::ScalarField2D;

use crate::error::{PriorError, Result};
use crate::normalize::{LatentStats, Normalizer};
use crate::schedule::NoiseSchedule;
use crate::unet::UNet;
use crate::vae::Vae;

fn check_t(t: usize, sched: &NoiseSchedule) -> Result<()> {
    if t == 0 || t > sched.t_max() {
        return Err(PriorError::Schedule(format!(
            "timestep {t} outside 1..={}",
            sched.t_max()
        )));
    }
    Ok(())
}

/// Standard-normal tensor of the given shape.
pub fn noise_like(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| standard_normal(rng)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Marginal forward sample: z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps.
pub fn forward_diffuse(
    z0: &Tensor,
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    check_t(t, sched)?;
    if z0.shape() != eps.shape() {
        return Err(PriorError::ShapeMismatch(format!(
            "z0 {:?} vs eps {:?}",
            z0.shape(),
            eps.shape()
        )));
    }
    let ab = sched.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let data = z0
        .data()
        .iter()
        .zip(eps.data())
        .map(|(z, e)| a * z + b * e)
        .collect();
    Ok(Tensor::new(z0.shape().to_vec(), data).unwrap())
}

/// Single-step transition: z_t = sqrt(alpha_t) z_{t-1} + sqrt(beta_t) eps.
pub fn single_step_transition(
    z_prev: &Tensor,
    t: usize,
    eps: &Tensor,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    check_t(t, sched)?;
    let a = sched.alpha[t - 1].sqrt();
    let b = sched.beta[t - 1].sqrt();
    let data = z_prev
        .data()
        .iter()
        .zip(eps.data())
        .map(|(z, e)| a * z + b * e)
        .collect();
    Ok(Tensor::new(z_prev.shape().to_vec(), data).unwrap())
}

/// Coefficients (on z_t, on eps_pred) of the deterministic DDIM update
/// from t to t_prev, with alpha_bar(0) = 1.
pub fn ddim_coefficients(t: usize, t_prev: usize, sched: &NoiseSchedule) -> Result<(f64, f64)> {
    check_t(t, sched)?;
    if t_prev >= t {
        return Err(PriorError::Schedule(format!(
            "DDIM step needs t_prev < t, got {t_prev} >= {t}"
        )));
    }
    let ab_t = sched.alpha_bar(t);
    let ab_p = sched.alpha_bar(t_prev);
    let coef_z = (ab_p / ab_t).sqrt();
    let coef_e = (1.0 - ab_p).sqrt() - (ab_p * (1.0 - ab_t) / ab_t).sqrt();
    Ok((coef_z, coef_e))
}

pub fn ddim_step(
    z_t: &Tensor,
    t: usize,
    t_prev: usize,
    eps_pred: &Tensor,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    let (cz, ce) = ddim_coefficients(t, t_prev, sched)?;
    if z_t.shape() != eps_pred.shape() {
        return Err(PriorError::ShapeMismatch(format!(
            "z_t {:?} vs eps_pred {:?}",
            z_t.shape(),
            eps_pred.shape()
        )));
    }
    let data = z_t
        .data()
        .iter()
        .zip(eps_pred.data())
        .map(|(z, e)| cz * z + ce * e)
        .collect();
    Ok(Tensor::new(z_t.shape().to_vec(), data).unwrap())
}

/// On-tape DDIM update, differentiable through both arguments.
pub fn ddim_step_var(
    z_t: &Var,
    t: usize,
    t_prev: usize,
    eps_pred: &Var,
    sched: &NoiseSchedule,
) -> Result<Var> {
    let (cz, ce) = ddim_coefficients(t, t_prev, sched)?;
    Ok(z_t.scale(cz)?.add(&eps_pred.scale(ce)?)?)
}

/// Strided timestep subsequence T = t_n > ... > t_1 > t_0 = 0.
pub fn ddim_timesteps(t_max: usize, n_steps: usize) -> Result<Vec<usize>> {
    if n_steps == 0 || n_steps > t_max {
        return Err(PriorError::Schedule(format!(
            "n_steps {n_steps} must lie in 1..={t_max}"
        )));
    }
    let mut ts: Vec<usize> = (0..=n_steps).rev().map(|i| i * t_max / n_steps).collect();
    ts.dedup();
    Ok(ts)
}

/// Mean over the batch of the per-sample squared noise-matching error
/// `||eps - eps_pred(z_t, t)||^2`, with t drawn uniformly per sample.
pub fn diffusion_loss<F>(
    tape: &Tape,
    batch: &[Tensor],
    sched: &NoiseSchedule,
    rng: &mut ChaCha8Rng,
    predict: F,
) -> Result<Var>
where
    F: Fn(&Var, usize) -> Result<Var>,
{
    if batch.is_empty() {
        return Err(PriorError::InvalidConfig("empty diffusion batch".into()));
    }
    let mut total: Option<Var> = None;
    for z0 in batch {
        let t = rng.gen_range(1..=sched.t_max());
        let eps = noise_like(&z0.shape().to_vec(), rng);
        let z_t = forward_diffuse(z0, t, &eps, sched)?;
        let z_t_leaf = tape.leaf(z_t);
        let eps_leaf = tape.leaf(eps);
        let pred = predict(&z_t_leaf, t)?;
        let diff = pred.sub(&eps_leaf)?;
        let per = diff.mul(&diff)?.sum()?;
        total = Some(match total {
            Some(acc) => acc.add(&per)?,
            None => per,
        });
    }
    Ok(total.unwrap().scale(1.0 / batch.len() as f64)?)
}

/// Differentiable DDIM chain from z_T down to z_0 on the given tape.
pub fn sample_latent(
    z_t: &Var,
    unet: &UNet,
    unet_params: &[Var],
    sched: &NoiseSchedule,
    n_steps: usize,
) -> Result<Var> {
    let ts = ddim_timesteps(sched.t_max(), n_steps)?;
    let mut z = z_t.clone();
    for w in ts.windows(2) {
        let (t, t_prev) = (w[0], w[1]);
        let eps = unet.predict(&z, t, unet_params)?;
        z = ddim_step_var(&z, t, t_prev, &eps, sched)?;
    }
    Ok(z)
}

/// Full sampling pipeline: DDIM chain in standardized latent space,
/// channel-wise unstandardize, decode, denormalize.
pub fn sample(
    z_t: &Tensor,
    unet: &UNet,
    vae: &Vae,
    norm: &Normalizer,
    stats: &LatentStats,
    sched: &NoiseSchedule,
    n_steps: usize,
    dx: f64,
    dy: f64,
) -> Result<ScalarField2D> {
    let tape = Tape::new();
    let unet_params = unet.params.bind(&tape);
    let vae_params = vae.params.bind(&tape);
    let z = tape.leaf(z_t.clone());
    let z0 = sample_latent(&z, unet, &unet_params, sched, n_steps)?;
    let z0 = stats.unstandardize_var(&z0)?;
    let x = vae.decode(&z0, &vae_params)?;
    norm.to_field(&x.value(), dx, dy)
}

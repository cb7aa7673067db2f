//! Gradient-descent (or Adam) loop on the latent variable, with
//! best-iterate tracking, early stopping, and divergence handling.

use lddim_autodiff::rng::stream;
use lddim_autodiff::Tensor;
use lddim_fvm::{BoundaryConditions, ScalarField2D};
use lddim_metrics::MetricsBundle;
use lddim_prior::noise_like;

use crate::config::{InversionConfig, PriorMode};
use crate::error::{InversionError, Result};
use crate::model::PriorModel;
use crate::objective::{evaluate, Evaluation};
use crate::obs::ObservationSet;

/// Relative loss change below which the run stops early...
pub const EARLY_STOP_REL: f64 = 1e-8;
/// ...measured over this many iterations.
pub const EARLY_STOP_WINDOW: usize = 50;

/// Per-iteration loss decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub iter: usize,
    pub misfit: f64,
    pub regularizer: f64,
    pub total: f64,
    pub grad_norm: f64,
}

/// Outcome of one inversion run; fields are those of the best iterate.
#[derive(Debug, Clone)]
pub struct InversionResult {
    pub k_hat: ScalarField2D,
    pub h_hat: ScalarField2D,
    pub z: Tensor,
    pub loss_history: Vec<LossRecord>,
    pub iterations: usize,
    pub best_iter: usize,
    pub diverged: bool,
    pub metrics: Option<MetricsBundle>,
}

impl InversionResult {
    /// Fill the metrics bundle against known ground truth.
    pub fn attach_metrics(
        &mut self,
        k_truth: &ScalarField2D,
        h_truth: &ScalarField2D,
        evaluated_in_log: bool,
    ) -> Result<()> {
        let (k_hat, k_truth_eval);
        if evaluated_in_log {
            k_hat = self.k_hat.map(f64::ln);
            k_truth_eval = k_truth.map(f64::ln);
        } else {
            k_hat = self.k_hat.clone();
            k_truth_eval = k_truth.clone();
        }
        self.metrics = Some(MetricsBundle::compute(
            &k_hat,
            &k_truth_eval,
            &self.h_hat,
            h_truth,
            evaluated_in_log,
        )?);
        Ok(())
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, z: &mut [f64], grad: &[f64], eta: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let c1 = 1.0 - B1.powi(self.step as i32);
        let c2 = 1.0 - B2.powi(self.step as i32);
        for p in 0..z.len() {
            self.m[p] = B1 * self.m[p] + (1.0 - B1) * grad[p];
            self.v[p] = B2 * self.v[p] + (1.0 - B2) * grad[p] * grad[p];
            z[p] -= eta * (self.m[p] / c1) / ((self.v[p] / c2).sqrt() + EPS);
        }
    }
}

/// Initial latent: standard normal for learned priors, the prior mean
/// (zeros) for the pixel-space baseline.
pub fn initial_latent(cfg: &InversionConfig, prior: &PriorModel) -> Result<Tensor> {
    let shape = prior.latent_shape(cfg.prior_mode)?;
    Ok(match cfg.prior_mode {
        PriorMode::PixelSpace => Tensor::zeros(&shape),
        _ => {
            let mut rng = stream(cfg.seed, "invert-z0");
            noise_like(&shape, &mut rng)
        }
    })
}

/// Run the optimization loop from the seeded initial latent.
pub fn invert(
    obs: &ObservationSet,
    cfg: &InversionConfig,
    prior: &PriorModel,
    bc: &BoundaryConditions,
) -> Result<InversionResult> {
    let z0 = initial_latent(cfg, prior)?;
    invert_from(obs, cfg, prior, bc, z0)
}

/// Run the optimization loop from an explicit initial latent.
pub fn invert_from(
    obs: &ObservationSet,
    cfg: &InversionConfig,
    prior: &PriorModel,
    bc: &BoundaryConditions,
    z0: Tensor,
) -> Result<InversionResult> {
    cfg.validate()?;
    let mut z = z0;
    let mut adam = AdamState::new(z.len());

    let mut history: Vec<LossRecord> = Vec::with_capacity(cfg.max_iter);
    let mut best: Option<(usize, Evaluation, Tensor)> = None;
    let mut diverged = false;

    for it in 0..cfg.max_iter {
        let eval = match evaluate(&z, obs, cfg, prior, bc) {
            Ok(e) => e,
            Err(e) => {
                // solver blow-ups mid-run degrade to best-so-far
                if best.is_some() {
                    diverged = true;
                    break;
                }
                return Err(e);
            }
        };
        if !eval.total.is_finite() {
            diverged = true;
            break;
        }
        history.push(LossRecord {
            iter: it,
            misfit: eval.misfit,
            regularizer: eval.regularizer,
            total: eval.total,
            grad_norm: eval.grad_norm,
        });
        let improves = best
            .as_ref()
            .map(|(_, b, _)| eval.total < b.total)
            .unwrap_or(true);
        if improves {
            best = Some((it, eval.clone(), z.clone()));
        }

        if it + 1 >= EARLY_STOP_WINDOW + 1 {
            let past = history[it - EARLY_STOP_WINDOW].total;
            let rel = (past - eval.total) / past.abs().max(1e-30);
            if rel < EARLY_STOP_REL {
                break;
            }
        }
        if it + 1 == cfg.max_iter {
            break;
        }

        let mut zv = z.data().to_vec();
        if cfg.use_adam {
            adam.update(&mut zv, eval.grad.data(), cfg.eta);
        } else {
            for (p, g) in zv.iter_mut().zip(eval.grad.data()) {
                *p -= cfg.eta * g;
            }
        }
        z = Tensor::new(z.shape().to_vec(), zv)?;
    }

    let (best_iter, best_eval, best_z) = best.ok_or_else(|| {
        InversionError::InvalidConfig("no finite iterate produced".into())
    })?;
    Ok(InversionResult {
        k_hat: best_eval.k_hat,
        h_hat: best_eval.h_hat,
        z: best_z,
        iterations: history.len(),
        loss_history: history,
        best_iter,
        diverged,
        metrics: None,
    })
}

/// Baseline: optimize one normalized ln-K value per cell directly.
pub fn pixel_space_invert(
    obs: &ObservationSet,
    cfg: &InversionConfig,
    prior: &PriorModel,
    bc: &BoundaryConditions,
) -> Result<InversionResult> {
    let mut cfg = cfg.clone();
    cfg.prior_mode = PriorMode::PixelSpace;
    invert(obs, &cfg, prior, bc)
}

/// Baseline: optimize the VAE latent through the decoder only.
pub fn vae_prior_invert(
    obs: &ObservationSet,
    cfg: &InversionConfig,
    prior: &PriorModel,
    bc: &BoundaryConditions,
) -> Result<InversionResult> {
    let mut cfg = cfg.clone();
    cfg.prior_mode = PriorMode::VaeOnly;
    invert(obs, &cfg, prior, bc)
}

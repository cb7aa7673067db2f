//! The inversion objective J(z) = misfit + beta * ||z||^2 / 2 and its
//! gradient. The head misfit is pulled back to the conductivity field by
//! the discrete adjoint of the flow solve, then through the decoder (and
//! DDIM chain) by the tape, seeded at the on-tape conductivity node.

use lddim_autodiff::{Tape, Tensor, Var};
use lddim_fvm::{BoundaryConditions, ForwardState, ScalarField2D};
use lddim_prior::sample_latent;

use crate::config::{InversionConfig, PriorMode};
use crate::error::{InversionError, Result};
use crate::model::PriorModel;
use crate::obs::ObservationSet;

/// Saturation bound of the normalized ln-K soft clamp
/// x -> SOFT_CLAMP * tanh(x / SOFT_CLAMP).
pub const SOFT_CLAMP: f64 = 1.2;

/// ½‖z‖².
pub fn latent_regularizer(z: &Tensor) -> f64 {
    0.5 * z.data().iter().map(|v| v * v).sum::<f64>()
}

/// One full forward + gradient evaluation at a fixed latent.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub misfit: f64,
    pub misfit_k: f64,
    pub regularizer: f64,
    pub smoothing: f64,
    pub total: f64,
    pub grad: Tensor,
    pub grad_norm: f64,
    pub k_hat: ScalarField2D,
    pub h_hat: ScalarField2D,
}

fn check_latent_shape(z: &Tensor, expected: &[usize]) -> Result<()> {
    if z.shape() != expected {
        return Err(InversionError::InvalidConfig(format!(
            "latent shape {:?} does not match prior shape {:?}",
            z.shape(),
            expected
        )));
    }
    Ok(())
}

/// Smoothing penalty ½ t Σ_faces (z_p − z_q)² and its gradient,
/// accumulated into `grad` (pixel-space mode only).
fn tikhonov(z: &Tensor, nx: usize, ny: usize, weight: f64, grad: &mut [f64]) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let v = z.data();
    let mut pen = 0.0;
    let mut face = |p: usize, q: usize| {
        let d = v[p] - v[q];
        pen += 0.5 * weight * d * d;
        grad[p] += weight * d;
        grad[q] -= weight * d;
    };
    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            if i + 1 < nx {
                face(p, p + 1);
            }
            if j + 1 < ny {
                face(p, p + nx);
            }
        }
    }
    pen
}

/// Evaluate the objective and its latent gradient at `z`.
pub fn evaluate(
    z: &Tensor,
    obs: &ObservationSet,
    cfg: &InversionConfig,
    prior: &PriorModel,
    bc: &BoundaryConditions,
) -> Result<Evaluation> {
    cfg.validate()?;
    check_latent_shape(z, &prior.latent_shape(cfg.prior_mode)?)?;
    let tape = Tape::new();
    let zv = tape.leaf(z.clone());

    // latent -> normalized ln-K tensor, on tape
    let x: Var = match cfg.prior_mode {
        PriorMode::LatentDiffusion => {
            let vae = prior.require_vae(cfg.prior_mode)?;
            let unet = prior.require_unet(cfg.prior_mode)?;
            let sched = prior.require_sched(cfg.prior_mode)?;
            let ub = unet.params.bind(&tape);
            let vb = vae.params.bind(&tape);
            let z0 = sample_latent(&zv, unet, &ub, sched, cfg.ddim_steps)?;
            let z0 = prior.latent_stats.unstandardize_var(&z0)?;
            vae.decode(&z0, &vb)?
        }
        PriorMode::VaeOnly => {
            let vae = prior.require_vae(cfg.prior_mode)?;
            let vb = vae.params.bind(&tape);
            vae.decode(&zv, &vb)?
        }
        PriorMode::PixelSpace => zv.clone(),
    };

    // soft clamp keeps exp(ln K) inside a bounded range whatever the
    // decoder emits; near-identity on the data range [-1, 1]
    let x = x.scale(1.0 / SOFT_CLAMP)?.tanh()?.scale(SOFT_CLAMP)?;

    // denormalize on tape: K = exp(affine(x))
    let range = prior.norm.lnk_max - prior.norm.lnk_min;
    let k_var = x
        .scale(0.5 * range)?
        .add_scalar(prior.norm.lnk_min + 0.5 * range)?
        .exp()?;
    let k_tensor = k_var.value();
    let k_hat = ScalarField2D::new(
        prior.nx,
        prior.ny,
        prior.dx,
        prior.dy,
        k_tensor.data().to_vec(),
    )?;

    let state = ForwardState::solve(&k_hat, bc)?;
    let h_hat = state.head.clone();

    // head misfit and its cotangent dl/dh
    let mut misfit = 0.0;
    let mut dl_dh = ScalarField2D::new(
        prior.nx,
        prior.ny,
        prior.dx,
        prior.dy,
        vec![0.0; prior.nx * prior.ny],
    )?;
    for o in &obs.heads {
        if o.i >= prior.nx || o.j >= prior.ny {
            return Err(InversionError::InvalidObservations(format!(
                "observation ({}, {}) outside prior grid {}x{}",
                o.i, o.j, prior.nx, prior.ny
            )));
        }
        let r = h_hat.at(o.i, o.j) - o.value;
        misfit += r * r;
        let cur = dl_dh.at(o.i, o.j);
        dl_dh.set(o.i, o.j, cur + 2.0 * r);
    }

    // pull dl/dh back to dl/dK through the adjoint solve
    let mut g_k = state.vjp(&dl_dh)?.into_values();

    // optional direct conductivity misfit in ln K
    let mut misfit_k = 0.0;
    if let Some(w) = cfg.k_obs_weight {
        for o in &obs.conductivities {
            let p = o.j * prior.nx + o.i;
            let resid = k_hat.values()[p].ln() - o.value.ln();
            misfit_k += resid * resid;
            g_k[p] += w * 2.0 * resid / k_hat.values()[p];
        }
    }

    // seed the tape at the conductivity node and pull back to z
    let cot = Tensor::new(k_tensor.shape().to_vec(), g_k)?;
    let grads = tape.backward_with(&k_var, &cot)?;
    let mut grad = grads.wrt(&zv).data().to_vec();
    for (g, zi) in grad.iter_mut().zip(z.data()) {
        *g += cfg.beta * zi;
    }
    let smoothing = if cfg.prior_mode == PriorMode::PixelSpace {
        tikhonov(z, prior.nx, prior.ny, cfg.tikhonov, &mut grad)
    } else {
        0.0
    };

    let regularizer = latent_regularizer(z);
    let total = misfit
        + cfg.k_obs_weight.unwrap_or(0.0) * misfit_k
        + cfg.beta * regularizer
        + smoothing;
    let grad_norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Evaluation {
        misfit,
        misfit_k,
        regularizer,
        smoothing,
        total,
        grad: Tensor::new(z.shape().to_vec(), grad)?,
        grad_norm,
        k_hat,
        h_hat,
    })
}

//! The latent diffusion prior: convolutional VAE, U-Net noise
//! predictor, forward/reverse diffusion algebra, and the two-stage
//! training procedure.

pub mod diffusion;
pub mod error;
pub mod normalize;
pub mod schedule;
pub mod train;
pub mod unet;
pub mod vae;

pub use diffusion::{
    ddim_coefficients, ddim_step, ddim_step_var, ddim_timesteps, diffusion_loss, forward_diffuse,
    noise_like, sample, sample_latent, single_step_transition,
};
pub use error::{PriorError, Result};
pub use normalize::{LatentStats, Normalizer, LN_RANGE_CAP};
pub use schedule::{make_schedule, NoiseSchedule, BETA_END, BETA_START};
pub use train::{
    encode_dataset, fields_to_tensors, load_latent_stats, save_latent_stats,
    train_diffusion, train_diffusion_epochs, train_vae,
    train_vae_epochs, write_log_csv, DiffusionTrainOutput, EpochLog, TrainConfig, VaeTrainOutput,
};
pub use unet::{UNet, UNetConfig, TIME_EMBED_DIM};
pub use vae::{gaussian_kl, reparameterize, sigma_from_logvar, vae_loss, Vae, VaeConfig};

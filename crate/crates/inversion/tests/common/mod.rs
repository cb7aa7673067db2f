use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lddim_autodiff::{AdamConfig, Tape, Tensor};
use lddim_fvm::BoundaryConditions;
use lddim_prior::{
    diffusion_loss, make_schedule, noise_like, LatentStats, Normalizer, TrainConfig, UNet, Vae,
};

use lddim_inversion::PriorModel;

pub fn bc() -> BoundaryConditions {
    BoundaryConditions::new(1.0, 0.0)
}

pub fn normalizer() -> Normalizer {
    Normalizer {
        lnk_min: -3.0,
        lnk_max: 0.0,
    }
}

/// Denoiser with a non-zero output head: a few optimizer steps on random
/// latents so the DDIM chain exercises the network.
pub fn warmed_unet(cfg: &TrainConfig) -> UNet {
    let mut unet = UNet::new(cfg.unet_config(), 5).unwrap();
    let sched = make_schedule(cfg.t_steps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let uc = cfg.unet_config();
    for _ in 0..3 {
        let batch: Vec<Tensor> = (0..4)
            .map(|_| noise_like(&[1, uc.latent_channels, uc.latent_h, uc.latent_w], &mut rng))
            .collect();
        let tape = Tape::new();
        let bound = unet.params.bind(&tape);
        let loss = diffusion_loss(&tape, &batch, &sched, &mut rng, |z, t| {
            unet.predict(z, t, &bound)
        })
        .unwrap();
        let grads = tape.backward(&loss).unwrap();
        let collected = unet.params.collect_grads(&grads, &bound);
        unet.params
            .adam_step(&collected, &AdamConfig::default())
            .unwrap();
    }
    unet
}

/// Untrained-but-nontrivial tiny prior on an 8x8 grid.
pub fn tiny_ld_prior() -> PriorModel {
    let cfg = TrainConfig::tiny();
    let vae = Vae::new(cfg.vae_config(), 9).unwrap();
    let unet = warmed_unet(&cfg);
    let sched = make_schedule(cfg.t_steps).unwrap();
    let stats = LatentStats {
        mean: vec![0.2, -0.1],
        std: vec![1.3, 0.8],
    };
    PriorModel::latent_diffusion(vae, unet, normalizer(), sched, stats, 1.0, 1.0)
}

pub fn tiny_vae_prior() -> PriorModel {
    let cfg = TrainConfig::tiny();
    let vae = Vae::new(cfg.vae_config(), 9).unwrap();
    PriorModel::vae_only(vae, normalizer(), 1.0, 1.0)
}

pub fn tiny_pixel_prior(nx: usize, ny: usize) -> PriorModel {
    PriorModel::pixel_space(normalizer(), nx, ny, 1.0, 1.0)
}

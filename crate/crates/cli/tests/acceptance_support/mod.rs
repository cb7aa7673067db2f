//! Shared helpers for the acceptance suite.

use std::path::{Path, PathBuf};
use std::process::Command;

use lddim_autodiff::{AdamConfig, Tape, Tensor};
use lddim_metrics::FeatureEmbedding;
use lddim_prior::{diffusion_loss, make_schedule, noise_like, Normalizer, TrainConfig, UNet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact heads of the 1-D series problem: half-cell resistances in a
/// chain between the two Dirichlet faces.
pub fn resistor_chain_heads(k: &[f64], dx: f64, h_left: f64, h_right: f64) -> Vec<f64> {
    let n = k.len();
    let mut resist = Vec::with_capacity(n + 1);
    resist.push(0.5 * dx / k[0]);
    for i in 0..n - 1 {
        resist.push(0.5 * dx / k[i] + 0.5 * dx / k[i + 1]);
    }
    resist.push(0.5 * dx / k[n - 1]);
    let total: f64 = resist.iter().sum();
    let flux = (h_left - h_right) / total;
    let mut heads = Vec::with_capacity(n);
    let mut h = h_left;
    for i in 0..n {
        h -= flux * resist[i];
        heads.push(h);
    }
    heads
}

pub fn tiny_normalizer() -> Normalizer {
    Normalizer {
        lnk_min: -3.0,
        lnk_max: 0.0,
    }
}

/// Denoiser with a non-zero output head: a few optimizer steps on random
/// latents so the DDIM chain exercises the whole network.
pub fn warmed_unet(cfg: &TrainConfig, seed: u64) -> UNet {
    let mut unet = UNet::new(cfg.unet_config(), seed).unwrap();
    let sched = make_schedule(cfg.t_steps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
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

/// Brute-force unbiased MMD^2 with the cubic polynomial kernel.
pub fn kid_oracle(x: &[FeatureEmbedding], y: &[FeatureEmbedding]) -> f64 {
    let d = x[0].features.len() as f64;
    let kern = |u: &[f64], v: &[f64]| -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        (dot / d + 1.0).powi(3)
    };
    let (n, m) = (x.len(), y.len());
    let mut xx = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                xx += kern(&x[i].features, &x[j].features);
            }
        }
    }
    let mut yy = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                yy += kern(&y[i].features, &y[j].features);
            }
        }
    }
    let mut xy = 0.0;
    for a in x {
        for b in y {
            xy += kern(&a.features, &b.features);
        }
    }
    xx / (n * (n - 1)) as f64 + yy / (m * (m - 1)) as f64 - 2.0 * xy / (n * m) as f64
}

pub const TINY_CONFIG: &str = "\
nx = 8
ny = 8
n_total = 20
n_train = 14
n_val = 4
n_test = 2
epochs = 2
batch = 4
depth = 1
base_channels = 8
latent_channels = 2
t_steps = 50
sample_steps = 5
invert_steps = 3
max_iter = 10
obs_layout = 4
seed = 11
";

pub fn run_lddim(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_lddim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawning lddim");
    assert!(
        out.status.success(),
        "lddim {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn walk(root: &Path, base: &Path, out: &mut Vec<PathBuf>) {
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            walk(&p, base, out);
        } else {
            out.push(p.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

/// Relative paths whose presence or bytes differ between two trees.
pub fn compare_trees(a: &Path, b: &Path) -> Vec<PathBuf> {
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    walk(a, a, &mut pa);
    walk(b, b, &mut pb);
    pa.sort();
    pb.sort();
    let mut bad: Vec<PathBuf> = Vec::new();
    for p in pa.iter().chain(&pb) {
        if bad.contains(p) {
            continue;
        }
        let (fa, fb) = (a.join(p), b.join(p));
        if !fa.is_file() || !fb.is_file() || std::fs::read(fa).unwrap() != std::fs::read(fb).unwrap()
        {
            bad.push(p.clone());
        }
    }
    bad.dedup();
    bad
}

//! `lddim`: command-line driver for dataset synthesis, two-stage prior
//! training, sampling, inversion, sweeps, evaluation, and plotting.

mod config;
mod plot;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::Rng;

use lddim_autodiff::rng::{indexed_stream, stream};
use lddim_fvm::{BoundaryConditions, ForwardState, ScalarField2D};
use lddim_inversion::{
    experiment_sweep, invert, observe_head, summarize, uniform_layout, write_result_bundle,
    write_sweep_csv, PriorMode, PriorModel,
};
use lddim_metrics::{
    embed, fid_with_shrinkage, kid, mean_corrected_relative, relative_l2, ssim, FeatureEmbedding,
    EMBED_DIM, SSIM_WINDOW,
};
use lddim_prior::{
    load_latent_stats, make_schedule, noise_like, sample, train_diffusion, train_vae, LatentStats,
    Normalizer, UNet, Vae,
};
use lddim_synth::{build_dataset, DatasetKind, DatasetManifest};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "lddim",
    about = "Latent-diffusion differentiable inversion of conductivity fields",
    after_help = config::key_help_text()
)]
struct Cli {
    /// Key-value config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config key).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a conductivity dataset with train/val/test splits.
    Generate {
        /// Override the total sample count (splits scale 70/20/10).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Stage 1: train the VAE on a generated dataset.
    TrainVae {
        /// Dataset directory containing manifest.txt.
        #[arg(long)]
        data: PathBuf,
    },
    /// Stage 2: train the denoiser in the frozen VAE's latent space.
    TrainDiffusion {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint directory holding vae.ldad and normalizer.ldad
        /// (defaults to --out).
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Draw fields from the trained prior.
    Sample {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Invert observations of a ground-truth field.
    Invert {
        /// Ground-truth conductivity field (LDF2).
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Repeat inversion over seeds (and observation layouts).
    Sweep {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
    },
    /// Compute metrics between prediction and truth (files or dirs).
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Optional predicted / true head fields for the head error.
        #[arg(long)]
        pred_head: Option<PathBuf>,
        #[arg(long)]
        truth_head: Option<PathBuf>,
    },
    /// Render an LDF2 field as a PNG heatmap plus CSV.
    Plot {
        #[arg(long)]
        input: PathBuf,
        /// Apply the natural log before rendering.
        #[arg(long)]
        log: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn stage_seed(master: u64, label: &str) -> u64 {
    stream(master, label).gen()
}

fn load_split(data: &Path, split: &str) -> Result<Vec<ScalarField2D>> {
    let manifest = DatasetManifest::read(&data.join("manifest.txt"))
        .with_context(|| format!("reading manifest in {}", data.display()))?;
    let mut fields = Vec::new();
    for rec in manifest.split_files(split) {
        let path = data.join(split).join(&rec.filename);
        fields.push(
            ScalarField2D::read_ldf2(&path)
                .with_context(|| format!("reading {}", path.display()))?,
        );
    }
    if fields.is_empty() {
        bail!("split {split:?} in {} is empty", data.display());
    }
    Ok(fields)
}

fn load_prior(cfg: &RunConfig, ckpt: Option<&Path>) -> Result<PriorModel> {
    let (dx, dy) = (cfg.dx(), cfg.dy());
    let norm = match ckpt {
        Some(dir) => Normalizer::load(&dir.join("normalizer.ldad"))
            .with_context(|| format!("loading normalizer from {}", dir.display()))?,
        None => Normalizer {
            lnk_min: cfg.lnk_min,
            lnk_max: cfg.lnk_max,
        },
    };
    match cfg.prior_mode {
        PriorMode::PixelSpace => Ok(PriorModel::pixel_space(norm, cfg.nx, cfg.ny, dx, dy)),
        mode => {
            let dir = ckpt.ok_or_else(|| {
                anyhow::anyhow!("prior mode {} needs --ckpt", mode.name())
            })?;
            let tc = cfg.train_config(0)?;
            let vae_path = dir.join("vae.ldad");
            if !vae_path.exists() {
                bail!("missing VAE checkpoint {}", vae_path.display());
            }
            let vae = Vae::from_checkpoint(tc.vae_config(), &vae_path)?;
            if mode == PriorMode::VaeOnly {
                return Ok(PriorModel::vae_only(vae, norm, dx, dy));
            }
            let unet_path = dir.join("unet.ldad");
            if !unet_path.exists() {
                bail!("missing denoiser checkpoint {}", unet_path.display());
            }
            let unet = UNet::from_checkpoint(tc.unet_config(), &unet_path)?;
            let sched = make_schedule(cfg.t_steps)?;
            let stats_path = dir.join("latent_stats.ldad");
            let latent_stats = if stats_path.exists() {
                load_latent_stats(&stats_path)?
            } else {
                LatentStats::identity(cfg.latent_channels)
            };
            Ok(PriorModel::latent_diffusion(vae, unet, norm, sched, latent_stats, dx, dy))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))?;
    let bc = BoundaryConditions::new(cfg.bc_left, cfg.bc_right);

    match cli.command {
        Command::Generate { n } => {
            let (n_total, splits) = match n {
                None => (cfg.n_total, (cfg.n_train, cfg.n_val, cfg.n_test)),
                Some(n) => {
                    let train = n * 7 / 10;
                    let val = n * 2 / 10;
                    (n, (train, val, n - train - val))
                }
            };
            let manifest = build_dataset(
                cfg.kind,
                &cli.out,
                cfg.nx,
                cfg.ny,
                n_total,
                splits,
                stage_seed(cfg.seed, "generate"),
            )?;
            println!(
                "generated {} {} fields into {}",
                manifest.records.len(),
                cfg.kind.name(),
                cli.out.display()
            );
        }
        Command::TrainVae { data } => {
            let train = load_split(&data, "train")?;
            let val = load_split(&data, "val")?;
            let tc = cfg.train_config(stage_seed(cfg.seed, "train-vae"))?;
            let out = train_vae(&train, &val, &tc, &cli.out)?;
            let last = out.log.last().unwrap();
            println!(
                "vae checkpoint {} (epoch {} train {:.6e} val {:.6e})",
                out.checkpoint.display(),
                last.epoch,
                last.train_loss,
                last.val_loss
            );
        }
        Command::TrainDiffusion { data, ckpt } => {
            let ckpt = ckpt.unwrap_or_else(|| cli.out.clone());
            let vae_path = ckpt.join("vae.ldad");
            if !vae_path.exists() {
                bail!(
                    "diffusion training needs a VAE checkpoint first; missing {}",
                    vae_path.display()
                );
            }
            let tc = cfg.train_config(stage_seed(cfg.seed, "train-diffusion"))?;
            let vae = Vae::from_checkpoint(tc.vae_config(), &vae_path)?;
            let norm = Normalizer::load(&ckpt.join("normalizer.ldad"))?;
            let train = load_split(&data, "train")?;
            let val = load_split(&data, "val")?;
            let out = train_diffusion(&vae, &norm, &train, &val, &tc, &cli.out)?;
            let last = out.log.last().unwrap();
            println!(
                "denoiser checkpoint {} (epoch {} train {:.6e})",
                out.checkpoint.display(),
                last.epoch,
                last.train_loss
            );
        }
        Command::Sample { ckpt, n } => {
            let saved_mode = cfg.prior_mode;
            cfg.prior_mode = PriorMode::LatentDiffusion;
            let prior = load_prior(&cfg, Some(&ckpt))?;
            cfg.prior_mode = saved_mode;
            let vae = prior.vae.as_ref().unwrap();
            let unet = prior.unet.as_ref().unwrap();
            let sched = prior.sched.as_ref().unwrap();
            let (c, h, w) = vae.cfg.latent_shape();
            for i in 0..n {
                let mut rng = indexed_stream(cfg.seed, "sample", i as u64);
                let z = noise_like(&[1, c, h, w], &mut rng);
                let field = sample(
                    &z,
                    unet,
                    vae,
                    &prior.norm,
                    &prior.latent_stats,
                    sched,
                    cfg.sample_steps,
                    cfg.dx(),
                    cfg.dy(),
                )?;
                let path = cli.out.join(format!("sample_{i:04}.ldf2"));
                field.write_ldf2(&path)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Invert { truth, ckpt } => {
            let prior = load_prior(&cfg, ckpt.as_deref())?;
            let k_truth = read_truth(&truth, prior.norm.k_floor())?;
            let h_truth = ForwardState::solve(&k_truth, &bc)?.head;
            let layout = uniform_layout(cfg.obs_layout, k_truth.nx, k_truth.ny)?;
            let obs = observe_head(&h_truth, &layout)?;
            let icfg = cfg.inversion_config(stage_seed(cfg.seed, "invert"));
            let mut result = invert(&obs, &icfg, &prior, &bc)?;
            result.attach_metrics(&k_truth, &h_truth, cfg.kind == DatasetKind::Bimaterial)?;
            write_result_bundle(&cli.out, &result)?;
            let m = result.metrics.as_ref().unwrap();
            println!(
                "inversion finished: {} iterations, best iter {}, eps_h {:.4e}, eps_K~ {:.4e}",
                result.iterations, result.best_iter, m.eps_h, m.eps_k_tilde
            );
        }
        Command::Sweep { truth, ckpt } => {
            let prior = load_prior(&cfg, ckpt.as_deref())?;
            let k_truth = read_truth(&truth, prior.norm.k_floor())?;
            let icfg = cfg.inversion_config(0);
            let seeds: Vec<u64> = (0..cfg.n_seeds)
                .map(|i| indexed_stream(cfg.seed, "sweep-seed", i as u64).gen())
                .collect();
            let rows = experiment_sweep(
                cfg.sweep_kind,
                &icfg,
                &prior,
                &k_truth,
                &bc,
                &seeds,
                cfg.kind == DatasetKind::Bimaterial,
                cfg.workers,
            )?;
            let summary = summarize(&rows);
            write_sweep_csv(&cli.out, &rows, &summary)?;
            println!(
                "sweep wrote {} runs and {} summary rows to {}",
                rows.len(),
                summary.len(),
                cli.out.display()
            );
        }
        Command::Evaluate {
            pred,
            truth,
            pred_head,
            truth_head,
        } => {
            let csv = if pred.is_dir() && truth.is_dir() {
                evaluate_sets(&cfg, &pred, &truth)?
            } else {
                evaluate_fields(&pred, &truth, pred_head.as_deref(), truth_head.as_deref())?
            };
            let path = cli.out.join("metrics.csv");
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        Command::Plot { input, log } => {
            let mut field = ScalarField2D::read_ldf2(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            if log {
                field = field.map(f64::ln);
            }
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "field".into());
            let png = cli.out.join(format!("{stem}.png"));
            let csv = cli.out.join(format!("{stem}.csv"));
            plot::plot_field(&field, &png, &csv)?;
            println!("wrote {} and {}", png.display(), csv.display());
        }
    }
    Ok(())
}

/// Ground-truth conductivities are floored at the prior's K floor
/// before solving: synthesized fields may touch exactly zero.
fn read_truth(path: &Path, floor: f64) -> Result<ScalarField2D> {
    let field = ScalarField2D::read_ldf2(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(field.map(|v| v.max(floor)))
}

fn evaluate_fields(
    pred: &Path,
    truth: &Path,
    pred_head: Option<&Path>,
    truth_head: Option<&Path>,
) -> Result<String> {
    let run = pred
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let k_hat = ScalarField2D::read_ldf2(pred)?;
    let k_truth = ScalarField2D::read_ldf2(truth)?;
    let lo = k_truth.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = k_truth
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut csv = String::from("run,metric,value\n");
    let mut push = |metric: &str, value: f64| {
        csv.push_str(&format!("{run},{metric},{value:.17e}\n"));
    };
    push("eps_K", relative_l2(&k_hat, &k_truth)?);
    push("eps_K_tilde", mean_corrected_relative(&k_hat, &k_truth)?);
    push(
        "ssim",
        ssim(&k_hat, &k_truth, SSIM_WINDOW, (hi - lo).max(f64::MIN_POSITIVE))?,
    );
    if let (Some(ph), Some(th)) = (pred_head, truth_head) {
        let h_hat = ScalarField2D::read_ldf2(ph)?;
        let h_truth = ScalarField2D::read_ldf2(th)?;
        push("eps_h", relative_l2(&h_hat, &h_truth)?);
    }
    Ok(csv)
}

fn embed_dir(dir: &Path, seed: u64) -> Result<Vec<FeatureEmbedding>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ldf2"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .ldf2 files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let f = ScalarField2D::read_ldf2(p)?;
            // compare conductivities in log space so low-valued phases
            // contribute; floor relative to the field maximum keeps
            // exact zeros finite
            let top = f.values().iter().cloned().fold(0.0f64, f64::max);
            let g = if top > 0.0 {
                let floor = top * 1e-12;
                f.map(|v| v.max(floor).ln())
            } else {
                f
            };
            Ok(embed(&g, seed)?)
        })
        .collect()
}

fn evaluate_sets(cfg: &RunConfig, pred: &Path, truth: &Path) -> Result<String> {
    let gen = embed_dir(pred, cfg.extractor_seed)?;
    let real = embed_dir(truth, cfg.extractor_seed)?;
    let ridge = if gen.len() <= EMBED_DIM || real.len() <= EMBED_DIM {
        1e-6
    } else {
        0.0
    };
    let run = pred
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "set".into());
    let mut csv = String::from("run,metric,value\n");
    csv.push_str(&format!(
        "{run},fid,{:.17e}\n",
        fid_with_shrinkage(&real, &gen, ridge)?
    ));
    csv.push_str(&format!("{run},kid,{:.17e}\n", kid(&real, &gen)?));
    csv.push_str(&format!("{run},extractor_seed,{}\n", cfg.extractor_seed));
    Ok(csv)
}

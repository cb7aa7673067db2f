//! Dataset materialization: generated fields written as LDF2 files
//! under train/val/test directories, with a line-oriented manifest
//! (`<split> <filename> <seed> key=value ...`) recording how each
//! sample was produced.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use lddim_autodiff::rng::indexed_stream;
use lddim_fvm::ScalarField2D;

use crate::bimaterial::{bimaterial_field, BimaterialParams};
use crate::error::{Result, SynthError};
use crate::grf::{gaussian_field, GrfParams};

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// The seven in-distribution correlation lengths, cycled across samples.
pub const GAUSSIAN_LENGTHS: [f64; 7] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Gaussian,
    Bimaterial,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Bimaterial => "bimaterial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "bimaterial" => Ok(Self::Bimaterial),
            other => Err(SynthError::InvalidParams(format!(
                "unknown dataset kind '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub split: String,
    pub filename: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!("{} {} {}", r.split, r.filename, r.seed));
            for (k, v) in &r.params {
                out.push_str(&format!(" {k}={v}"));
            }
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        f.write_all(out.as_bytes()).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let split = parts
                .next()
                .ok_or_else(|| SynthError::BadManifest(format!("line {}", lineno + 1)))?
                .to_string();
            let filename = parts
                .next()
                .ok_or_else(|| SynthError::BadManifest(format!("line {}", lineno + 1)))?
                .to_string();
            let seed: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    SynthError::BadManifest(format!("bad seed on line {}", lineno + 1))
                })?;
            let mut params = Vec::new();
            for kv in parts {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    SynthError::BadManifest(format!("bad key=value '{kv}' on line {}", lineno + 1))
                })?;
                params.push((k.to_string(), v.to_string()));
            }
            records.push(ManifestRecord {
                split,
                filename,
                seed,
                params,
            });
        }
        Ok(Self { records })
    }

    pub fn split_files(&self, split: &str) -> Vec<&ManifestRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }
}

/// Generate `n_total` fields deterministically from the master seed and
/// write them under `out_dir/{train,val,test}` plus `manifest.txt`.
pub fn build_dataset(
    kind: DatasetKind,
    out_dir: &Path,
    nx: usize,
    ny: usize,
    n_total: usize,
    splits: (usize, usize, usize),
    master_seed: u64,
) -> Result<DatasetManifest> {
    if splits.0 + splits.1 + splits.2 != n_total {
        return Err(SynthError::InvalidParams(format!(
            "splits {:?} do not sum to n_total {n_total}",
            splits
        )));
    }
    for name in SPLIT_NAMES {
        let dir = out_dir.join(name);
        fs::create_dir_all(&dir).map_err(|source| SynthError::Io { path: dir, source })?;
    }

    let mut manifest = DatasetManifest::default();
    for i in 0..n_total {
        let split = if i < splits.0 {
            "train"
        } else if i < splits.0 + splits.1 {
            "val"
        } else {
            "test"
        };
        let seed: u64 = indexed_stream(master_seed, "dataset-sample", i as u64).gen();
        let filename = format!("sample_{i:05}.ldf2");
        let path = out_dir.join(split).join(&filename);

        let (field, params) = generate_sample(kind, nx, ny, i, seed)?;
        field.write_ldf2(&path).map_err(|e| match e {
            lddim_fvm::FvmError::Io(source) => SynthError::Io { path, source },
            other => SynthError::Fvm(other),
        })?;
        manifest.records.push(ManifestRecord {
            split: split.to_string(),
            filename,
            seed,
            params,
        });
    }
    manifest.write(&out_dir.join("manifest.txt"))?;
    Ok(manifest)
}

fn generate_sample(
    kind: DatasetKind,
    nx: usize,
    ny: usize,
    index: usize,
    seed: u64,
) -> Result<(ScalarField2D, Vec<(String, String)>)> {
    match kind {
        DatasetKind::Gaussian => {
            let lambda = GAUSSIAN_LENGTHS[index % GAUSSIAN_LENGTHS.len()];
            let field = gaussian_field(&GrfParams::new(lambda, nx, ny, seed)?)?;
            let params = vec![
                ("kind".into(), "gaussian".into()),
                ("lambda".into(), format!("{lambda}")),
                ("nx".into(), format!("{nx}")),
                ("ny".into(), format!("{ny}")),
            ];
            Ok((field, params))
        }
        DatasetKind::Bimaterial => {
            let bp = BimaterialParams::from_seed(nx, ny, seed);
            let sample = bimaterial_field(&bp)?;
            let params = vec![
                ("kind".into(), "bimaterial".into()),
                ("alpha".into(), format!("{}", bp.alpha())),
                ("nx".into(), format!("{nx}")),
                ("ny".into(), format!("{ny}")),
            ];
            Ok((sample.k, params))
        }
    }
}

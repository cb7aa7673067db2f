//! Mapping between conductivity fields and the normalized ln-K tensors
//! the networks operate on. The fitted ln-K range is capped from below
//! so min-max normalized inputs with exact zeros stay finite.

use std::path::Path;

use lddim_autodiff::{checkpoint, concat, ParameterSet, Tensor, Var};
use lddim_fvm::ScalarField2D;

use crate::error::{PriorError, Result};

/// Maximum admitted ln-K span; values further below the dataset maximum
/// (including exact zeros) are floored to lnk_max - LN_RANGE_CAP.
pub const LN_RANGE_CAP: f64 = 13.815510557964274; // ln(1e6)

/// Affine map from ln K to [-1, 1] using dataset extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub lnk_min: f64,
    pub lnk_max: f64,
}

impl Normalizer {
    /// Fit to the positive ln-K range of a dataset, capped at
    /// LN_RANGE_CAP below the maximum.
    pub fn fit<'a>(fields: impl IntoIterator<Item = &'a ScalarField2D>) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in fields {
            for &v in f.values() {
                if v > 0.0 {
                    let y = v.ln();
                    lo = lo.min(y);
                    hi = hi.max(y);
                }
            }
        }
        if !(hi > lo) {
            return Err(PriorError::InvalidConfig(
                "cannot fit normalizer to a constant or empty dataset".into(),
            ));
        }
        Ok(Self {
            lnk_min: lo.max(hi - LN_RANGE_CAP),
            lnk_max: hi,
        })
    }

    /// Smallest conductivity the map can represent; smaller inputs
    /// (and non-positive ones) are floored here.
    pub fn k_floor(&self) -> f64 {
        self.lnk_min.exp()
    }

    pub fn normalize_value(&self, k: f64) -> f64 {
        let y = if k > 0.0 { k.ln().max(self.lnk_min) } else { self.lnk_min };
        2.0 * (y - self.lnk_min) / (self.lnk_max - self.lnk_min) - 1.0
    }

    pub fn denormalize_value(&self, x: f64) -> f64 {
        let y = self.lnk_min + (x + 1.0) * 0.5 * (self.lnk_max - self.lnk_min);
        y.exp()
    }

    /// Field -> [1, 1, H, W] network input.
    pub fn to_tensor(&self, f: &ScalarField2D) -> Tensor {
        let data: Vec<f64> = f.values().iter().map(|&v| self.normalize_value(v)).collect();
        Tensor::new(vec![1, 1, f.ny, f.nx], data).unwrap()
    }

    /// [1, 1, H, W] network output -> field on the given grid geometry.
    pub fn to_field(&self, t: &Tensor, dx: f64, dy: f64) -> Result<ScalarField2D> {
        let shape = t.shape();
        if shape.len() != 4 || shape[0] != 1 || shape[1] != 1 {
            return Err(PriorError::ShapeMismatch(format!(
                "expected [1, 1, H, W] tensor, got {shape:?}"
            )));
        }
        let (ny, nx) = (shape[2], shape[3]);
        let data: Vec<f64> = t.data().iter().map(|&v| self.denormalize_value(v)).collect();
        Ok(ScalarField2D::new(nx, ny, dx, dy, data)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut ps = ParameterSet::new();
        ps.add("lnk_min", Tensor::scalar(self.lnk_min));
        ps.add("lnk_max", Tensor::scalar(self.lnk_max));
        checkpoint::save(&ps, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ps = checkpoint::load(path)?;
        Ok(Self {
            lnk_min: ps.by_name("lnk_min")?.data()[0],
            lnk_max: ps.by_name("lnk_max")?.data()[0],
        })
    }
}

/// Per-channel affine statistics of the encoded latents; diffusion
/// operates on standardized latents so the denoiser never has to learn
/// channel means or scales.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl LatentStats {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    /// Per-channel mean and standard deviation over [1, C, H, W] latents.
    pub fn fit(latents: &[Tensor]) -> Result<Self> {
        let shape = latents
            .first()
            .ok_or_else(|| PriorError::InvalidConfig("no latents to fit".into()))?
            .shape()
            .to_vec();
        if shape.len() != 4 || shape[0] != 1 {
            return Err(PriorError::ShapeMismatch(format!(
                "expected [1, C, H, W] latents, got {shape:?}"
            )));
        }
        let (c, per) = (shape[1], shape[2] * shape[3]);
        let mut mean = vec![0.0; c];
        let mut std = vec![0.0; c];
        let n = (latents.len() * per) as f64;
        for z in latents {
            for ch in 0..c {
                mean[ch] += z.data()[ch * per..(ch + 1) * per].iter().sum::<f64>();
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for z in latents {
            for ch in 0..c {
                std[ch] += z.data()[ch * per..(ch + 1) * per]
                    .iter()
                    .map(|v| (v - mean[ch]) * (v - mean[ch]))
                    .sum::<f64>();
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if !(*s > 0.0) {
                return Err(PriorError::InvalidConfig(
                    "cannot standardize a constant latent channel".into(),
                ));
            }
        }
        Ok(Self { mean, std })
    }

    fn check(&self, shape: &[usize]) -> Result<usize> {
        if shape.len() != 4 || shape[0] != 1 || shape[1] != self.mean.len() {
            return Err(PriorError::ShapeMismatch(format!(
                "latent {shape:?} does not match {} channel statistics",
                self.mean.len()
            )));
        }
        Ok(shape[2] * shape[3])
    }

    /// (z - mean) / std, channel-wise.
    pub fn standardize(&self, z: &Tensor) -> Result<Tensor> {
        let per = self.check(z.shape())?;
        let data = z
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.mean[i / per]) * (1.0 / self.std[i / per]))
            .collect();
        Ok(Tensor::new(z.shape().to_vec(), data)?)
    }

    /// z * std + mean on tape, channel-wise.
    pub fn unstandardize_var(&self, z: &Var) -> Result<Var> {
        self.check(&z.value().shape().to_vec())?;
        let mut chans = Vec::with_capacity(self.mean.len());
        for ch in 0..self.mean.len() {
            chans.push(
                z.slice(1, ch, ch + 1)?
                    .scale(self.std[ch])?
                    .add_scalar(self.mean[ch])?,
            );
        }
        let refs: Vec<&Var> = chans.iter().collect();
        Ok(concat(&refs, 1)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut ps = ParameterSet::new();
        ps.add("mean", Tensor::new(vec![self.mean.len()], self.mean.clone())?);
        ps.add("std", Tensor::new(vec![self.std.len()], self.std.clone())?);
        checkpoint::save(&ps, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ps = checkpoint::load(path)?;
        Ok(Self {
            mean: ps.by_name("mean")?.data().to_vec(),
            std: ps.by_name("std")?.data().to_vec(),
        })
    }
}

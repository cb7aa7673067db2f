//! Distributional metrics over feature embeddings: Fréchet distance
//! between Gaussian fits and the unbiased kernel (MMD²) estimator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::embed::FeatureEmbedding;
use crate::error::{MetricsError, Result};

const EIG_TOL: f64 = -1e-10;

fn dims(set: &[FeatureEmbedding], what: &str) -> Result<usize> {
    let d = set
        .first()
        .ok_or_else(|| MetricsError::InvalidParams(format!("empty {what} set")))?
        .features
        .len();
    if set.iter().any(|e| e.features.len() != d) {
        return Err(MetricsError::InvalidParams(format!(
            "inconsistent embedding dimensions in {what} set"
        )));
    }
    Ok(d)
}

fn gaussian_fit(set: &[FeatureEmbedding], d: usize, ridge: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = set.len();
    let mut mu = DVector::zeros(d);
    for e in set {
        mu += DVector::from_column_slice(&e.features);
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for e in set {
        let c = DVector::from_column_slice(&e.features) - &mu;
        cov += &c * c.transpose();
    }
    cov /= (n - 1) as f64;
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    (mu, cov)
}

/// Symmetric PSD square root via eigendecomposition of ½(M + Mᵀ).
fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < EIG_TOL {
            return Err(MetricsError::IndefiniteCovariance(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Fréchet distance ‖μ−μ′‖² + tr(Σ + Σ′ − 2(ΣΣ′)^{1/2}) between Gaussian
/// fits of the two embedding sets. `ridge` is added to both covariance
/// diagonals; with `ridge = 0` each set must have at least d + 1 members.
pub fn fid_with_shrinkage(
    real: &[FeatureEmbedding],
    gen: &[FeatureEmbedding],
    ridge: f64,
) -> Result<f64> {
    let d = dims(real, "real")?;
    let dg = dims(gen, "generated")?;
    if d != dg {
        return Err(MetricsError::InvalidParams(format!(
            "embedding dimensions differ: {d} vs {dg}"
        )));
    }
    if real.len() < 2 || gen.len() < 2 {
        return Err(MetricsError::InvalidParams(
            "each set needs at least 2 embeddings".into(),
        ));
    }
    if ridge == 0.0 && (real.len() < d + 1 || gen.len() < d + 1) {
        return Err(MetricsError::Degenerate(format!(
            "covariance of {} / {} samples in dimension {d} is rank deficient; use shrinkage",
            real.len(),
            gen.len()
        )));
    }
    if ridge < 0.0 {
        return Err(MetricsError::InvalidParams("negative ridge".into()));
    }
    let (mu_r, cov_r) = gaussian_fit(real, d, ridge);
    let (mu_g, cov_g) = gaussian_fit(gen, d, ridge);
    let root_r = sqrtm_psd(&cov_r)?;
    let cross = sqrtm_psd(&(&root_r * &cov_g * &root_r))?;
    let mean_term = (&mu_r - &mu_g).norm_squared();
    let trace_term = cov_r.trace() + cov_g.trace() - 2.0 * cross.trace();
    Ok(mean_term + trace_term)
}

/// Fréchet distance without covariance shrinkage.
pub fn fid(real: &[FeatureEmbedding], gen: &[FeatureEmbedding]) -> Result<f64> {
    fid_with_shrinkage(real, gen, 0.0)
}

fn kernel(u: &[f64], v: &[f64], d: f64) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / d + 1.0).powi(3)
}

/// Unbiased MMD² estimator with the cubic polynomial kernel
/// k(u, v) = ((1/d) uᵀv + 1)³; may be negative for close distributions.
pub fn kid(real: &[FeatureEmbedding], gen: &[FeatureEmbedding]) -> Result<f64> {
    let d = dims(real, "real")?;
    let dg = dims(gen, "generated")?;
    if d != dg {
        return Err(MetricsError::InvalidParams(format!(
            "embedding dimensions differ: {d} vs {dg}"
        )));
    }
    let (n, m) = (real.len(), gen.len());
    if n < 2 || m < 2 {
        return Err(MetricsError::InvalidParams(
            "each set needs at least 2 embeddings".into(),
        ));
    }
    let df = d as f64;
    let mut xx = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                xx += kernel(&real[i].features, &real[j].features, df);
            }
        }
    }
    let mut yy = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                yy += kernel(&gen[i].features, &gen[j].features, df);
            }
        }
    }
    let mut xy = 0.0;
    for x in real {
        for y in gen {
            xy += kernel(&x.features, &y.features, df);
        }
    }
    Ok(xx / (n * (n - 1)) as f64 + yy / (m * (m - 1)) as f64 - 2.0 * xy / (n * m) as f64)
}

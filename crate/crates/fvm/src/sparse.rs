//! CSR storage for the five-point stiffness matrix, with a banded
//! Cholesky factorization for desk-scale problems and a Jacobi-
//! preconditioned conjugate-gradient fallback above the direct limit.
//!
//! The assembled matrix is symmetric negative-definite; both solvers
//! operate on its negation.

use crate::error::{FvmError, Result};

/// Direct factorization is used up to this many unknowns.
pub const DIRECT_SOLVE_LIMIT: usize = 40_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

/// `A(K) h = b` in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SparseLinearSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
    pub grid: GridShape,
}

impl SparseLinearSystem {
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            out[i] = acc;
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[k]] += self.vals[k] * x[i];
            }
        }
    }

    /// ‖A x − b‖₂ / max(‖b‖₂, 1e-300)
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..self.n {
            num += (ax[i] - b[i]) * (ax[i] - b[i]);
            den += b[i] * b[i];
        }
        (num.sqrt()) / den.sqrt().max(1e-300)
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        for k in self.row_ptr[row]..self.row_ptr[row + 1] {
            if self.col_idx[k] == col {
                return self.vals[k];
            }
        }
        0.0
    }
}

/// Lower-triangular band of the Cholesky factor of `-A`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>, // band[i*(bw+1) + (j - i + bw)] = L[i][j], j in [i-bw, i]
}

impl BandedCholesky {
    fn factor(system: &SparseLinearSystem, bw: usize) -> Result<Self> {
        let n = system.n;
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        // load -A into the lower band
        for i in 0..n {
            for k in system.row_ptr[i]..system.row_ptr[i + 1] {
                let j = system.col_idx[k];
                if j <= i {
                    debug_assert!(i - j <= bw);
                    band[i * w + (j + bw - i)] = -system.vals[k];
                }
            }
        }
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            for j in jlo..=i {
                let klo = jlo.max(j.saturating_sub(bw));
                let mut sum = band[i * w + (j + bw - i)];
                for k in klo..j {
                    sum -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(FvmError::NotPositiveDefinite(i));
                    }
                    band[i * w + bw] = sum.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = sum / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    /// Solve `-A x = c` by forward/back substitution.
    fn solve(&self, c: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = c.to_vec();
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            let mut sum = y[i];
            for j in jlo..i {
                sum -= self.band[i * w + (j + bw - i)] * y[j];
            }
            y[i] = sum / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let jhi = (i + bw).min(n - 1);
            let mut sum = y[i];
            for j in i + 1..=jhi {
                sum -= self.band[j * w + (i + bw - j)] * y[j];
            }
            y[i] = sum / self.band[i * w + bw];
        }
        y
    }
}

/// Reusable solver state for a fixed matrix.
#[derive(Debug, Clone)]
pub enum Factorization {
    Direct(BandedCholesky),
    /// Jacobi-preconditioned CG on `-A`; holds the inverse diagonal.
    Iterative { inv_diag: Vec<f64> },
}

impl Factorization {
    pub fn build(system: &SparseLinearSystem) -> Result<Self> {
        if system.n <= DIRECT_SOLVE_LIMIT {
            Ok(Self::Direct(BandedCholesky::factor(
                system,
                system.grid.nx,
            )?))
        } else {
            let mut inv_diag = vec![0.0; system.n];
            for i in 0..system.n {
                let d = -system.entry(i, i);
                if d <= 0.0 {
                    return Err(FvmError::NotPositiveDefinite(i));
                }
                inv_diag[i] = 1.0 / d;
            }
            Ok(Self::Iterative { inv_diag })
        }
    }

    /// Solve `A x = rhs` for the assembled (negative-definite) matrix.
    pub fn solve(&self, system: &SparseLinearSystem, rhs: &[f64]) -> Result<Vec<f64>> {
        let neg_rhs: Vec<f64> = rhs.iter().map(|v| -v).collect();
        match self {
            Self::Direct(chol) => Ok(chol.solve(&neg_rhs)),
            Self::Iterative { inv_diag } => pcg(system, &neg_rhs, inv_diag),
        }
    }
}

fn pcg(system: &SparseLinearSystem, b: &[f64], inv_diag: &[f64]) -> Result<Vec<f64>> {
    let n = system.n;
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-13;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm < tol {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..20 * n {
        // -A is SPD
        system.matvec(&p, &mut ap);
        ap.iter_mut().for_each(|v| *v = -*v);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm / bnorm < tol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = {
        let mut ax = vec![0.0; n];
        system.matvec(&x, &mut ax);
        ax.iter_mut().for_each(|v| *v = -*v);
        ax.iter()
            .zip(b)
            .map(|(a, bi)| (a - bi) * (a - bi))
            .sum::<f64>()
            .sqrt()
            / bnorm
    };
    Err(FvmError::SolveFailed {
        residual,
        tol,
    })
}

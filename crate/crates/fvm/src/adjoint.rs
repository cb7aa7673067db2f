//! Discrete-adjoint sensitivities of the head solve with respect to
//! the cell conductivities.
//!
//! For the scalar functional `l(h)` with residual `r = dl/dh`, the
//! adjoint solve is `A^T lambda = r` and the gradient is
//! `dl/dK = lambda^T (db/dK - (dA/dK) h)`, accumulated face by face
//! without ever materializing `dA/dK`. The assembled matrix is
//! symmetric, so the forward factorization is reused for the adjoint.

use crate::assemble::assemble_system;
use crate::error::{FvmError, Result};
use crate::field::{BoundaryConditions, ScalarField2D};
use crate::solve::{solve_head_with, RESIDUAL_TOL};
use crate::sparse::{Factorization, SparseLinearSystem};

/// Adjoint variables on the same grid as the head.
#[derive(Debug, Clone)]
pub struct AdjointState {
    pub lambda: ScalarField2D,
}

/// Cached forward solve: conductivity, assembled system, factorization
/// and head, kept together so adjoint solves can reuse the expensive
/// pieces.
#[derive(Debug, Clone)]
pub struct ForwardState {
    pub k: ScalarField2D,
    pub bc: BoundaryConditions,
    pub system: SparseLinearSystem,
    pub factor: Factorization,
    pub head: ScalarField2D,
}

impl ForwardState {
    pub fn solve(k: &ScalarField2D, bc: &BoundaryConditions) -> Result<Self> {
        let system = assemble_system(k, bc)?;
        let factor = Factorization::build(&system)?;
        let head = solve_head_with(&system, &factor)?;
        Ok(Self {
            k: k.clone(),
            bc: *bc,
            system,
            factor,
            head,
        })
    }

    /// Solve `A^T lambda = r` reusing the forward factorization
    /// (valid because `A` is symmetric).
    pub fn solve_adjoint(&self, r: &ScalarField2D) -> Result<AdjointState> {
        if !r.same_grid(&self.head) {
            return Err(FvmError::GridMismatch(format!(
                "adjoint rhs {}x{} vs head {}x{}",
                r.nx, r.ny, self.head.nx, self.head.ny
            )));
        }
        let lambda = self.factor.solve(&self.system, r.values())?;
        let mut atl = vec![0.0; self.system.n];
        self.system.matvec_transpose(&lambda, &mut atl);
        let num = atl
            .iter()
            .zip(r.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = r
            .values()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(1e-300);
        let residual = num / den;
        if !(residual < RESIDUAL_TOL) {
            return Err(FvmError::SolveFailed {
                residual,
                tol: RESIDUAL_TOL,
            });
        }
        let g = self.system.grid;
        Ok(AdjointState {
            lambda: ScalarField2D::new(g.nx, g.ny, g.dx, g.dy, lambda)?,
        })
    }

    /// Vector-Jacobian product: pulls the cotangent `dl/dh` back to
    /// `dl/dK` via one adjoint solve and a face-loop accumulation.
    pub fn vjp(&self, dl_dh: &ScalarField2D) -> Result<ScalarField2D> {
        let adj = self.solve_adjoint(dl_dh)?;
        conductivity_gradient(&adj.lambda, &self.head, &self.k, &self.bc)
    }
}

/// Solve `A^T lambda = r` with a fresh factorization.
pub fn solve_adjoint(system: &SparseLinearSystem, r: &ScalarField2D) -> Result<AdjointState> {
    let factor = Factorization::build(system)?;
    let lambda = factor.solve(system, r.values())?;
    let g = system.grid;
    Ok(AdjointState {
        lambda: ScalarField2D::new(g.nx, g.ny, g.dx, g.dy, lambda)?,
    })
}

/// Accumulate `dl/dK = lambda^T (db/dK - (dA/dK) h)` over faces.
///
/// Each interior face between cells p and q has transmissibility
/// `T = geo * 2 kp kq / (kp + kq)` and contributes `T (h_q - h_p)` to
/// row p and the negation to row q, hence
/// `dl/dk_c = -dT/dk_c * (h_q - h_p) * (lambda_p - lambda_q)`.
/// A Dirichlet ghost face at boundary cell p has `T_b = 2 geo k_p`,
/// appears as `-T_b` on the diagonal and `-T_b h_b` in the rhs, hence
/// `dl/dk_p = lambda_p * 2 geo * (h_p - h_b)`.
pub fn conductivity_gradient(
    lambda: &ScalarField2D,
    head: &ScalarField2D,
    k: &ScalarField2D,
    bc: &BoundaryConditions,
) -> Result<ScalarField2D> {
    if !lambda.same_grid(head) || !lambda.same_grid(k) {
        return Err(FvmError::GridMismatch(
            "lambda, head and conductivity must share a grid".into(),
        ));
    }
    let (nx, ny, dx, dy) = (k.nx, k.ny, k.dx, k.dy);
    let tx = dy / dx;
    let ty = dx / dy;
    let mut grad = vec![0.0; nx * ny];

    let mut face = |p: usize, q: usize, geo: f64| {
        let (kp, kq) = (k.values()[p], k.values()[q]);
        let denom = (kp + kq) * (kp + kq);
        let dt_dkp = geo * 2.0 * kq * kq / denom;
        let dt_dkq = geo * 2.0 * kp * kp / denom;
        let jump = head.values()[q] - head.values()[p];
        let lam = lambda.values()[p] - lambda.values()[q];
        grad[p] -= dt_dkp * jump * lam;
        grad[q] -= dt_dkq * jump * lam;
    };
    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            if i + 1 < nx {
                face(p, p + 1, tx);
            }
            if j + 1 < ny {
                face(p, p + nx, ty);
            }
        }
    }
    drop(face);

    for j in 0..ny {
        let p = j * nx;
        grad[p] += lambda.values()[p] * 2.0 * tx * (head.values()[p] - bc.left_dirichlet);
        let q = j * nx + nx - 1;
        grad[q] += lambda.values()[q] * 2.0 * tx * (head.values()[q] - bc.right_dirichlet);
    }

    ScalarField2D::new(nx, ny, dx, dy, grad)
}

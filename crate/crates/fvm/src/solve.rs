use crate::error::{FvmError, Result};
use crate::field::ScalarField2D;
use crate::sparse::{Factorization, SparseLinearSystem};

pub const RESIDUAL_TOL: f64 = 1e-10;

/// Solve `A h = b` and verify the relative residual.
pub fn solve_head(system: &SparseLinearSystem) -> Result<ScalarField2D> {
    let factor = Factorization::build(system)?;
    solve_head_with(system, &factor)
}

pub fn solve_head_with(
    system: &SparseLinearSystem,
    factor: &Factorization,
) -> Result<ScalarField2D> {
    let h = factor.solve(system, &system.rhs)?;
    let residual = system.relative_residual(&h, &system.rhs);
    if !(residual < RESIDUAL_TOL) {
        return Err(FvmError::SolveFailed {
            residual,
            tol: RESIDUAL_TOL,
        });
    }
    let g = system.grid;
    ScalarField2D::new(g.nx, g.ny, g.dx, g.dy, h)
}

//! TPFA assembly of the steady Darcy system on a uniform grid.
//!
//! Interior faces carry transmissibility `T = K_harm * dy/dx` (x-faces)
//! or `K_harm * dx/dy` (y-faces) with the harmonic mean of the two
//! adjacent cell conductivities. The left/right Dirichlet boundary
//! faces use the half-cell ghost transmissibility `2*K_cell * dy/dx`,
//! folded into the diagonal and the right-hand side. Top/bottom faces
//! are no-flux and contribute nothing. The result has a negative
//! diagonal equal to minus the sum of the face transmissibilities.

use crate::error::{FvmError, Result};
use crate::field::{BoundaryConditions, ScalarField2D};
use crate::sparse::{GridShape, SparseLinearSystem};

/// Harmonic mean of two adjacent cell conductivities: `2 kL kR / (kL + kR)`.
pub fn harmonic_face_conductivity(k_left: f64, k_right: f64) -> Result<f64> {
    if !(k_left > 0.0) {
        return Err(FvmError::NonPositiveConductivity {
            cell: 0,
            value: k_left,
        });
    }
    if !(k_right > 0.0) {
        return Err(FvmError::NonPositiveConductivity {
            cell: 1,
            value: k_right,
        });
    }
    Ok(2.0 * k_left * k_right / (k_left + k_right))
}

pub fn assemble_system(
    k: &ScalarField2D,
    bc: &BoundaryConditions,
) -> Result<SparseLinearSystem> {
    if k.nx < 2 || k.ny < 2 {
        return Err(FvmError::DegenerateGrid { nx: k.nx, ny: k.ny });
    }
    k.require_positive()?;
    let (nx, ny, dx, dy) = (k.nx, k.ny, k.dx, k.dy);
    let n = nx * ny;
    let tx = dy / dx;
    let ty = dx / dy;

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    let mut rhs = vec![0.0; n];
    row_ptr.push(0);

    for j in 0..ny {
        for i in 0..nx {
            let p = j * nx + i;
            let kp = k.values()[p];
            let mut diag = 0.0;

            let t_south = if j > 0 {
                harmonic_face_conductivity(kp, k.at(i, j - 1))? * ty
            } else {
                0.0 // no-flux
            };
            let t_west = if i > 0 {
                harmonic_face_conductivity(kp, k.at(i - 1, j))? * tx
            } else {
                // Dirichlet ghost face at half-cell distance
                let t = 2.0 * kp * tx;
                rhs[p] -= t * bc.left_dirichlet;
                diag -= t;
                0.0
            };
            let t_east = if i + 1 < nx {
                harmonic_face_conductivity(kp, k.at(i + 1, j))? * tx
            } else {
                let t = 2.0 * kp * tx;
                rhs[p] -= t * bc.right_dirichlet;
                diag -= t;
                0.0
            };
            let t_north = if j + 1 < ny {
                harmonic_face_conductivity(kp, k.at(i, j + 1))? * ty
            } else {
                0.0
            };

            diag -= t_south + t_west + t_east + t_north;

            // sorted column order: S, W, diag, E, N
            if t_south > 0.0 {
                col_idx.push(p - nx);
                vals.push(t_south);
            }
            if t_west > 0.0 {
                col_idx.push(p - 1);
                vals.push(t_west);
            }
            col_idx.push(p);
            vals.push(diag);
            if t_east > 0.0 {
                col_idx.push(p + 1);
                vals.push(t_east);
            }
            if t_north > 0.0 {
                col_idx.push(p + nx);
                vals.push(t_north);
            }
            row_ptr.push(col_idx.len());
        }
    }

    Ok(SparseLinearSystem {
        n,
        row_ptr,
        col_idx,
        vals,
        rhs,
        grid: GridShape { nx, ny, dx, dy },
    })
}

//! Face-centered Darcy velocities consistent with the assembled fluxes.

use crate::assemble::harmonic_face_conductivity;
use crate::error::{FvmError, Result};
use crate::field::{BoundaryConditions, ScalarField2D};

/// `ux` lives on the (nx+1) x ny vertical faces, `uy` on the
/// nx x (ny+1) horizontal faces. Boundary no-flux faces hold zero;
/// Dirichlet faces carry the half-cell ghost flux.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub nx: usize,
    pub ny: usize,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl VelocityField {
    #[inline]
    pub fn ux_at(&self, iface: usize, j: usize) -> f64 {
        self.ux[j * (self.nx + 1) + iface]
    }

    #[inline]
    pub fn uy_at(&self, i: usize, jface: usize) -> f64 {
        self.uy[jface * self.nx + i]
    }
}

pub fn darcy_velocity(
    k: &ScalarField2D,
    h: &ScalarField2D,
    bc: &BoundaryConditions,
) -> Result<VelocityField> {
    if !k.same_grid(h) {
        return Err(FvmError::GridMismatch(format!(
            "conductivity {}x{} vs head {}x{}",
            k.nx, k.ny, h.nx, h.ny
        )));
    }
    let (nx, ny, dx, dy) = (k.nx, k.ny, k.dx, k.dy);
    let mut ux = vec![0.0; (nx + 1) * ny];
    let mut uy = vec![0.0; nx * (ny + 1)];
    for j in 0..ny {
        // left Dirichlet face: half-cell distance dx/2
        ux[j * (nx + 1)] = -k.at(0, j) * (h.at(0, j) - bc.left_dirichlet) / (dx / 2.0);
        for i in 1..nx {
            let kh = harmonic_face_conductivity(k.at(i - 1, j), k.at(i, j))?;
            ux[j * (nx + 1) + i] = -kh * (h.at(i, j) - h.at(i - 1, j)) / dx;
        }
        ux[j * (nx + 1) + nx] =
            -k.at(nx - 1, j) * (bc.right_dirichlet - h.at(nx - 1, j)) / (dx / 2.0);
    }
    for j in 1..ny {
        for i in 0..nx {
            let kh = harmonic_face_conductivity(k.at(i, j - 1), k.at(i, j))?;
            uy[j * nx + i] = -kh * (h.at(i, j) - h.at(i, j - 1)) / dy;
        }
    }
    // top/bottom rows stay zero (no-flux)
    Ok(VelocityField { nx, ny, ux, uy })
}

/// Discrete divergence at every interior cell (flux balance after a solve).
pub fn max_interior_divergence(v: &VelocityField, dx: f64, dy: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..v.ny {
        for i in 0..v.nx {
            let div = (v.ux_at(i + 1, j) - v.ux_at(i, j)) * dy + (v.uy_at(i, j + 1) - v.uy_at(i, j)) * dx;
            worst = worst.max(div.abs());
        }
    }
    worst
}

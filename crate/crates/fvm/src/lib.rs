//! Differentiable finite-volume solver for steady 2-D Darcy flow.
//!
//! Two-point flux approximation on a uniform cell-centered grid with
//! Dirichlet head on the left/right boundaries and no-flux top/bottom.
//! Gradients with respect to the conductivity field come from the
//! discrete adjoint of the assembled linear system.

pub mod adjoint;
pub mod assemble;
pub mod error;
pub mod field;
pub mod solve;
pub mod sparse;
pub mod velocity;

pub use adjoint::{conductivity_gradient, solve_adjoint, AdjointState, ForwardState};
pub use assemble::{assemble_system, harmonic_face_conductivity};
pub use error::{FvmError, Result};
pub use field::{BoundaryConditions, ScalarField2D};
pub use solve::{solve_head, solve_head_with, RESIDUAL_TOL};
pub use sparse::{Factorization, GridShape, SparseLinearSystem, DIRECT_SOLVE_LIMIT};
pub use velocity::{darcy_velocity, max_interior_divergence, VelocityField};

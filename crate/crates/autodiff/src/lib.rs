//! Minimal reverse-mode automatic differentiation substrate: dense f64
//! tensors, a define-by-run operation tape, layer primitives, and an
//! Adam optimizer over named parameter sets.

pub mod checkpoint;
pub mod error;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use error::{AdError, Result};
pub use optim::{AdamConfig, ParameterSet};
pub use tape::{concat, Gradients, Tape, Var};
pub use tensor::Tensor;

//! Latent-variable inversion of conductivity fields from sparse head
//! observations: a generative parameterization maps the latent to a
//! conductivity field, the finite-volume flow solve produces heads, and
//! the misfit gradient flows back through the discrete adjoint and the
//! tape to the latent.

pub mod config;
pub mod error;
pub mod invert;
pub mod io;
pub mod model;
pub mod objective;
pub mod obs;
pub mod sweep;

pub use config::{InversionConfig, PriorMode};
pub use error::{InversionError, Result};
pub use invert::{
    initial_latent, invert, invert_from, pixel_space_invert, vae_prior_invert, InversionResult,
    LossRecord,
    EARLY_STOP_REL, EARLY_STOP_WINDOW,
};
pub use io::{write_result_bundle, write_sweep_csv};
pub use model::PriorModel;
pub use objective::{evaluate, latent_regularizer, Evaluation, SOFT_CLAMP};
pub use obs::{
    conductivity_misfit, data_misfit, observe_head, uniform_layout, HeadObservation,
    KObservation, ObservationSet,
};
pub use sweep::{experiment_sweep, summarize, SweepKind, SweepRow, SummaryRow, OBSERVATION_LAYOUTS};

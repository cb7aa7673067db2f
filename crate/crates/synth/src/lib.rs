//! Synthetic ground-truth conductivity fields: spectrally filtered
//! Gaussian random fields, Matern processes, correlated two-phase
//! (bimaterial) fields, and on-disk dataset materialization.

pub mod bimaterial;
pub mod dataset;
pub mod error;
pub mod grf;
pub mod matern;
pub mod spectral;

pub use bimaterial::{bimaterial_field, BimaterialParams, BimaterialSample};
pub use dataset::{
    build_dataset, DatasetKind, DatasetManifest, ManifestRecord, GAUSSIAN_LENGTHS, SPLIT_NAMES,
};
pub use error::{Result, SynthError};
pub use grf::{gaussian_field, total_variation, GrfParams, DOMAIN_SIZE};
pub use matern::{matern_gaussian_process, matern_with_label};

//! Periodic fields in real-to-complex spectral form.

mod fft;
pub mod field;
pub mod grid;
pub mod ops;
pub mod snapshot;

pub use field::{physical_l2_norm, sample, transform_roundtrip, SpectralField, SpectralVectorField};
pub use grid::{GridSpec, Mode};
pub use ops::{
    curl, dealias, dealias_vector, divergence, gradient, lambda, laplacian, leray_project,
    sobolev_norm, sobolev_seminorm, vector_seminorm,
};
pub use snapshot::Snapshot;

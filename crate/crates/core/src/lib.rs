//! Pseudo-spectral laboratory for decay rates of the compressible Hall-MHD
//! equations on a periodic box.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod initdata;
pub mod linear;
pub mod params;
pub mod rates;
pub mod spectral;
pub mod weighted;

pub use dynamics::State;
pub use error::{Error, Result};
pub use params::PhysParams;
pub use spectral::{GridSpec, SpectralField, SpectralVectorField};

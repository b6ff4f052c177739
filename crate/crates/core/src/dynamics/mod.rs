//! Nonlinear sources of the perturbation system and the exponential time stepper.
//!
//! Prognostic variables are `(varrho, u, B)` with `varrho = rho - 1`:
//!
//! ```text
//! d/dt varrho + div u = G1
//! d/dt u - mu lap u - (mu + nu) grad div u + grad varrho = G2
//! d/dt B - lap B = G3
//! ```

mod evolve;
mod sources;

pub use evolve::{
    evolve, H3Monitor, NormRecorder, Observer, Probe, Schedule, Stepper, TimeSeries,
    DEFAULT_C_ADV, DEFAULT_VACUUM_GUARD,
};
pub use sources::{
    compute_g, compute_s, fluid_sources, tensor_divergence, time_derivative_norms,
    time_derivatives, NonlinearFluxes, NonlinearSources, TimeDerivativeNorms, TimeDerivatives,
};

use crate::error::{Error, Result};
use crate::linear::LinearState;
use crate::spectral::ops::{dealias, dealias_vector, product_dealiased};
use crate::spectral::{sobolev_norm, GridSpec, SpectralField, SpectralVectorField};

/// Perturbation state `(varrho, u, B)` at time `t`, stored spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub varrho: SpectralField,
    pub u: SpectralVectorField,
    pub b: SpectralVectorField,
    pub t: f64,
}

impl State {
    pub fn new(varrho: SpectralField, u: SpectralVectorField, b: SpectralVectorField, t: f64) -> Result<Self> {
        let g = varrho.grid();
        if u.grid() != g || b.grid() != g {
            return Err(Error::GridMismatch("state components live on different grids".into()));
        }
        Ok(Self { varrho, u, b, t })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            varrho: SpectralField::zeros(grid),
            u: SpectralVectorField::zeros(grid),
            b: SpectralVectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.varrho.grid()
    }

    /// Apply the two-thirds rule to every component.
    pub fn dealiased(&self) -> Self {
        Self {
            varrho: dealias(&self.varrho),
            u: dealias_vector(&self.u),
            b: dealias_vector(&self.b),
            t: self.t,
        }
    }

    /// Momentum perturbation `m = (1 + varrho) u`, dealiased.
    pub fn momentum(&self) -> SpectralVectorField {
        let g = self.grid();
        let rho = self.varrho.to_physical();
        let u = self.u.to_physical();
        let comp = |i: usize| {
            let one_plus: Vec<f64> = rho.iter().map(|r| 1.0 + r).collect();
            product_dealiased(g, &one_plus, &u[i])
        };
        SpectralVectorField::new([comp(0), comp(1), comp(2)]).expect("same grid")
    }

    /// Conservative view `(varrho, m, B)`.
    pub fn to_linear(&self) -> LinearState {
        LinearState {
            varrho: self.varrho.clone(),
            m: self.momentum(),
            b: self.b.clone(),
        }
    }

    /// Pointwise minimum of `1 + varrho`.
    pub fn min_density(&self) -> f64 {
        self.varrho
            .to_physical()
            .iter()
            .fold(f64::INFINITY, |m, &r| m.min(1.0 + r))
    }

    /// `||(varrho, u, B)||_{H^s}`.
    pub fn sobolev_norm(&self, s: u32) -> f64 {
        let sq = |f: &SpectralField| sobolev_norm(f, s).powi(2);
        let mut acc = sq(&self.varrho);
        for c in self.u.components().iter().chain(self.b.components()) {
            acc += sq(c);
        }
        acc.sqrt()
    }

    /// First non-finite component, if any.
    pub fn non_finite_field(&self) -> Option<&'static str> {
        if !self.varrho.is_finite() {
            Some("varrho")
        } else if !self.u.is_finite() {
            Some("u")
        } else if !self.b.is_finite() {
            Some("B")
        } else {
            None
        }
    }
}

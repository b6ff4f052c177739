use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical coefficients of the perturbation system around `(rho, u, B) = (1, 0, 0)`.
///
/// Pressure law `P(rho) = rho^g / g`, so `P'(1) = 1` for every exponent `g`.
/// Magnetic diffusivity is fixed to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Shear viscosity, `mu > 0`.
    pub mu: f64,
    /// Second viscosity, `2 mu + 3 nu >= 0`.
    pub nu: f64,
    /// Pressure exponent `g > 1`.
    pub pressure_gamma: f64,
    /// Keep the Hall term in the induction equation.
    pub hall_enabled: bool,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            nu: 0.0,
            pressure_gamma: 5.0 / 3.0,
            hall_enabled: true,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParams(format!(
                "shear viscosity must satisfy mu > 0, got mu = {}",
                self.mu
            )));
        }
        if !(2.0 * self.mu + 3.0 * self.nu >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "viscosities must satisfy 2 mu + 3 nu >= 0, got {}",
                2.0 * self.mu + 3.0 * self.nu
            )));
        }
        if !(self.pressure_gamma > 1.0) || !self.pressure_gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "pressure exponent must exceed 1, got {}",
                self.pressure_gamma
            )));
        }
        Ok(())
    }

    /// Damping coefficient `2 mu + nu` of the longitudinal (acoustic) block.
    pub fn longitudinal_viscosity(&self) -> f64 {
        2.0 * self.mu + self.nu
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.pressure_gamma) / self.pressure_gamma
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        rho.powf(self.pressure_gamma - 1.0)
    }

    /// `P(1 + varrho) - P(1) - varrho`, evaluated without cancellation in the
    /// leading term.
    pub fn pressure_remainder(&self, varrho: f64) -> f64 {
        let g = self.pressure_gamma;
        (g * varrho.ln_1p()).exp_m1() / g - varrho
    }

    /// `P'(1 + varrho) / (1 + varrho) - 1`; identically zero when `g = 2`.
    pub fn pressure_correction(&self, varrho: f64) -> f64 {
        let g = self.pressure_gamma;
        if g == 2.0 {
            return 0.0;
        }
        ((g - 2.0) * varrho.ln_1p()).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viscosity_conditions() {
        let mut p = PhysParams::default();
        assert!(p.validate().is_ok());
        p.mu = -1.0;
        assert!(p.validate().is_err());
        p.mu = 1.0;
        p.nu = -1.0;
        assert!(p.validate().is_err());
        p.nu = -0.5;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn unit_sound_speed() {
        for g in [1.4, 5.0 / 3.0, 2.0, 3.0] {
            let p = PhysParams {
                pressure_gamma: g,
                ..Default::default()
            };
            assert!((p.pressure_derivative(1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_pressure_remainder() {
        let p = PhysParams {
            pressure_gamma: 2.0,
            ..Default::default()
        };
        for r in [1e-3, 0.01, 0.2] {
            assert!((p.pressure_remainder(r) - 0.5 * r * r).abs() < 1e-15);
            assert_eq!(p.pressure_correction(r), 0.0);
        }
    }
}

//! Weighted norms `||f||_{L^2_gamma} = (int |x|^{2 gamma} |f|^2 dx)^{1/2}` on the box.
//!
//! The weight is the minimum-image distance to a center. A grid node sitting
//! exactly on the center carries the exact cell average of `|y|^{2 gamma}`
//! instead of the point value, which keeps negative exponents finite and the
//! Cauchy-Schwarz and Holder inequalities exact for the discrete sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::quadrature::integrate;
use crate::spectral::ops::{lambda, partial};
use crate::spectral::{GridSpec, SpectralField, SpectralVectorField};

/// Mass fraction required inside the central half-box for Hardy ratios.
pub const SUPPORT_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub gamma: f64,
    /// Sobolev order for `weighted_sobolev_norm`.
    pub s: u32,
    /// Weight origin in box coordinates (the box center is the origin).
    pub center: [f64; 3],
}

impl WeightedNormSpec {
    pub fn new(gamma: f64) -> Result<Self> {
        let spec = Self {
            gamma,
            s: 0,
            center: [0.0; 3],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_order(mut self, s: u32) -> Self {
        self.s = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > -1.5) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weight exponent must exceed -3/2 for integrability, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// `(1/h^3) int_{[-h/2, h/2]^3} |y|^p dy` for `p > -3`.
pub fn cell_average_power(h: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    let a = 0.5 * h;
    // Six pyramids with apex at the origin; each contributes
    // a / (p + 3) * int_face |y|^p dA. The face integral uses symmetry.
    let inner = |u: f64| {
        integrate(
            |v| (u * u + v * v + a * a).powf(0.5 * p),
            &[0.0, a],
            1e-13,
            0.0,
            200,
        )
        .value
    };
    let face = 4.0 * integrate(inner, &[0.0, a], 1e-13, 0.0, 200).value;
    6.0 * a / (p + 3.0) * face / h.powi(3)
}

/// Per-node quadrature weights `w_p^{2 gamma} dV`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    grid: GridSpec,
    gamma: f64,
    weights: Vec<f64>,
}

fn min_image(x: f64, c: f64, l: f64) -> f64 {
    let d = x - c;
    d - l * (d / l).round()
}

impl WeightTable {
    pub fn new(grid: GridSpec, spec: &WeightedNormSpec) -> Result<Self> {
        spec.validate()?;
        let n = grid.n();
        let l = grid.box_length();
        let dv = grid.cell_volume();
        let p = 2.0 * spec.gamma;
        let center_value = cell_average_power(grid.dx(), p);
        let axis = |c: f64| -> Vec<f64> {
            (0..n)
                .map(|i| min_image(grid.coordinate(i), c, l).powi(2))
                .collect()
        };
        let (d0, d1, d2) = (axis(spec.center[0]), axis(spec.center[1]), axis(spec.center[2]));
        let tiny = (1e-12 * grid.dx()).powi(2);
        let mut weights = Vec::with_capacity(grid.physical_len());
        for a in &d0 {
            for b in &d1 {
                for c in &d2 {
                    let r2 = a + b + c;
                    let w = if r2 <= tiny {
                        center_value
                    } else if p == 0.0 {
                        1.0
                    } else {
                        r2.powf(0.5 * p)
                    };
                    weights.push(w * dv);
                }
            }
        }
        Ok(Self {
            grid,
            gamma: spec.gamma,
            weights,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_p w_p |f_p|^2 dV` over physical values.
    pub fn norm_squared(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, f)| w * f * f)
            .sum()
    }

    pub fn field_norm_squared(&self, f: &SpectralField) -> f64 {
        self.norm_squared(&f.to_physical())
    }

    pub fn vector_norm(&self, v: &SpectralVectorField) -> f64 {
        v.to_physical().iter().map(|c| self.norm_squared(c)).sum::<f64>().sqrt()
    }
}

fn check_grid(f: &SpectralField, table: &WeightTable) -> Result<()> {
    if f.grid() != table.grid {
        return Err(Error::GridMismatch("weight table built for another grid".into()));
    }
    Ok(())
}

pub fn weighted_l2_norm(f: &SpectralField, spec: &WeightedNormSpec) -> Result<f64> {
    let table = WeightTable::new(f.grid(), spec)?;
    Ok(table.field_norm_squared(f).sqrt())
}

pub fn weighted_vector_norm(v: &SpectralVectorField, spec: &WeightedNormSpec) -> Result<f64> {
    let table = WeightTable::new(v.grid(), spec)?;
    Ok(table.vector_norm(v))
}

/// Multi-indices of order `l` with their multinomial multiplicities.
pub fn multi_indices(l: u32) -> Vec<([u32; 3], f64)> {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut out = Vec::new();
    for a in 0..=l {
        for b in 0..=(l - a) {
            let c = l - a - b;
            out.push(([a, b, c], fact(l) / (fact(a) * fact(b) * fact(c))));
        }
    }
    out
}

fn derivative(f: &SpectralField, alpha: [u32; 3]) -> SpectralField {
    let mut g = f.clone();
    for (axis, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            g = partial(&g, axis);
        }
    }
    g
}

/// `(sum_{l <= s} ||grad^l f||^2_{L^2_gamma})^{1/2}` counting every ordered
/// derivative combination.
pub fn weighted_sobolev_norm(f: &SpectralField, spec: &WeightedNormSpec) -> Result<f64> {
    let table = WeightTable::new(f.grid(), spec)?;
    weighted_sobolev_with(f, spec.s, &table)
}

pub fn weighted_sobolev_with(f: &SpectralField, s: u32, table: &WeightTable) -> Result<f64> {
    check_grid(f, table)?;
    let mut acc = 0.0;
    for l in 0..=s {
        for (alpha, mult) in multi_indices(l) {
            acc += mult * table.field_norm_squared(&derivative(f, alpha));
        }
    }
    Ok(acc.sqrt())
}

/// `||grad^k v||_{L^2_gamma}` for a vector field (order `k` only).
pub fn weighted_vector_seminorm(v: &SpectralVectorField, k: u32, table: &WeightTable) -> f64 {
    let mut acc = 0.0;
    for c in v.components() {
        for (alpha, mult) in multi_indices(k) {
            acc += mult * table.field_norm_squared(&derivative(c, alpha));
        }
    }
    acc.sqrt()
}

/// `||f|| / (||f||_{L^2_s}^{1/2} ||f||_{L^2_{-s}}^{1/2})`, at most one.
pub fn weighted_interpolation_check(f: &SpectralField, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.5) {
        return Err(Error::InvalidArgument(format!("interpolation order must lie in (0, 3/2), got {s}")));
    }
    let vals = f.to_physical();
    let g = f.grid();
    let plain: f64 = vals.iter().map(|x| x * x).sum::<f64>() * g.cell_volume();
    if plain == 0.0 {
        return Err(Error::InvalidArgument("interpolation ratio of the zero field".into()));
    }
    let pos = WeightTable::new(g, &WeightedNormSpec::new(s)?)?.norm_squared(&vals);
    let neg = WeightTable::new(g, &WeightedNormSpec::new(-s)?)?.norm_squared(&vals);
    Ok(plain.sqrt() / (pos.sqrt() * neg.sqrt()).sqrt())
}

/// Fraction of `int |f|^2` inside `|x_i| <= L/4` for every axis.
pub fn central_mass_fraction(grid: GridSpec, values: &[f64]) -> f64 {
    let n = grid.n();
    let quarter = grid.box_length() / 4.0;
    let inside: Vec<bool> = (0..n).map(|i| grid.coordinate(i).abs() <= quarter + 1e-12).collect();
    let (mut total, mut central) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = values[grid.physical_index(i, j, k)];
                let e = v * v;
                total += e;
                if inside[i] && inside[j] && inside[k] {
                    central += e;
                }
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        central / total
    }
}

/// `||f||_{L^2_{-s}} / ||Lambda^s f||_{L^2}`, defined for fields well inside the box.
pub fn hardy_ratio(f: &SpectralField, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.5) {
        return Err(Error::InvalidArgument(format!("Hardy order must lie in (0, 3/2), got {s}")));
    }
    let g = f.grid();
    let vals = f.to_physical();
    let fraction = central_mass_fraction(g, &vals);
    if fraction < SUPPORT_FRACTION {
        return Err(Error::Support { fraction });
    }
    let lhs = WeightTable::new(g, &WeightedNormSpec::new(-s)?)?.norm_squared(&vals).sqrt();
    let rhs = lambda(f, s)?.l2_norm();
    if rhs == 0.0 {
        return Err(Error::InvalidArgument("Hardy ratio of a field with no nonzero modes".into()));
    }
    Ok(lhs / rhs)
}

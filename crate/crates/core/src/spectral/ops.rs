//! Fourier-multiplier operators on spectral fields.

use num_complex::Complex64;

use super::field::{SpectralField, SpectralVectorField};
use super::grid::GridSpec;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn component_map(
    v: &SpectralVectorField,
    f: impl Fn(usize, [Complex64; 3], &super::grid::Mode) -> Complex64,
) -> SpectralField {
    let g = v.grid();
    let [a, b, c] = v.components();
    let coeffs = g
        .modes()
        .map(|m| {
            let idx = m.idx;
            f(idx, [a.coeffs()[idx], b.coeffs()[idx], c.coeffs()[idx]], &m)
        })
        .collect();
    SpectralField::from_coeffs(g, coeffs).expect("same grid")
}

/// `i k f_hat`.
pub fn gradient(f: &SpectralField) -> SpectralVectorField {
    let d = |axis: usize| f.map_modes(|m, c| I * m.k_odd[axis] * c);
    SpectralVectorField::with_flag([d(0), d(1), d(2)], false)
}

/// Single partial derivative `d/dx_axis`.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    f.map_modes(|m, c| I * m.k_odd[axis] * c)
}

/// `i k . v_hat`.
pub fn divergence(v: &SpectralVectorField) -> SpectralField {
    component_map(v, |_, c, m| I * (m.k_odd[0] * c[0] + m.k_odd[1] * c[1] + m.k_odd[2] * c[2]))
}

/// `i k x v_hat`; the result is flagged solenoidal.
pub fn curl(v: &SpectralVectorField) -> SpectralVectorField {
    let k = |m: &super::grid::Mode| m.k_odd;
    let c0 = component_map(v, |_, c, m| I * (k(m)[1] * c[2] - k(m)[2] * c[1]));
    let c1 = component_map(v, |_, c, m| I * (k(m)[2] * c[0] - k(m)[0] * c[2]));
    let c2 = component_map(v, |_, c, m| I * (k(m)[0] * c[1] - k(m)[1] * c[0]));
    SpectralVectorField::with_flag([c0, c1, c2], true)
}

/// `-|k|^2 f_hat`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.map_modes(|m, c| -m.k_squared() * c)
}

pub fn vector_laplacian(v: &SpectralVectorField) -> SpectralVectorField {
    let [a, b, c] = v.components();
    SpectralVectorField::with_flag([laplacian(a), laplacian(b), laplacian(c)], v.is_solenoidal())
}

/// `Lambda^s f = F^{-1}(|k|^s f_hat)`; zero at `k = 0` for `s > 0`.
pub fn lambda(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fractional order must be nonnegative, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.map_modes(|m, c| {
        let q2 = m.k_squared();
        if q2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            q2.powf(0.5 * s) * c
        }
    }))
}

/// Helmholtz-Leray projection onto divergence-free fields.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    let proj = |axis: usize| {
        component_map(v, move |_, c, m| {
            let k = m.k_odd;
            let q2 = m.k_odd_squared();
            if q2 == 0.0 {
                return c[axis];
            }
            let kdot = k[0] * c[0] + k[1] * c[1] + k[2] * c[2];
            c[axis] - k[axis] * kdot / q2
        })
    };
    SpectralVectorField::with_flag([proj(0), proj(1), proj(2)], true)
}

/// `||Lambda^k f||_{L^2}` for real `k >= 0`.
pub fn sobolev_seminorm(f: &SpectralField, k: f64) -> f64 {
    sobolev_seminorm_squared(f, k).sqrt()
}

pub fn sobolev_seminorm_squared(f: &SpectralField, k: f64) -> f64 {
    assert!(k >= 0.0, "seminorm order must be nonnegative");
    let g = f.grid();
    let mut acc = 0.0;
    for (m, c) in g.modes().zip(f.coeffs()) {
        let q2 = m.k_squared();
        let mult = if k == 0.0 {
            1.0
        } else if q2 == 0.0 {
            0.0
        } else {
            q2.powf(k)
        };
        acc += m.weight * mult * c.norm_sqr();
    }
    acc * g.volume()
}

/// Componentwise sum of squared seminorms, square-rooted.
pub fn vector_seminorm(v: &SpectralVectorField, k: f64) -> f64 {
    v.components()
        .iter()
        .map(|c| sobolev_seminorm_squared(c, k))
        .sum::<f64>()
        .sqrt()
}

/// Plain `H^s` norm, `sum_{l <= s} ||nabla^l f||^2` with integer `s`.
pub fn sobolev_norm(f: &SpectralField, s: u32) -> f64 {
    (0..=s)
        .map(|l| sobolev_seminorm_squared(f, l as f64))
        .sum::<f64>()
        .sqrt()
}

/// True when the mode survives the two-thirds rule.
pub fn keeps_mode(grid: GridSpec, j: [i64; 3]) -> bool {
    let n = grid.n() as i64;
    j.iter().all(|v| 3 * v.abs() <= n)
}

/// Two-thirds rule: zero every mode with some `|j_i| > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = f.grid();
    f.map_modes(|m, c| if keeps_mode(g, m.j) { c } else { Complex64::new(0.0, 0.0) })
}

pub fn dealias_vector(v: &SpectralVectorField) -> SpectralVectorField {
    let [a, b, c] = v.components();
    SpectralVectorField::with_flag([dealias(a), dealias(b), dealias(c)], v.is_solenoidal())
}

/// Pointwise product of physical arrays, transformed and dealiased.
pub fn product_dealiased(grid: GridSpec, a: &[f64], b: &[f64]) -> SpectralField {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    dealias(&SpectralField::from_physical(grid, &prod).expect("same grid"))
}

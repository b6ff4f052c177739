//! Exact per-mode solution of the linearized system
//!
//! ```text
//! d/dt rho + div m = 0
//! d/dt m - mu lap m - (mu + nu) grad div m + grad rho = 0
//! d/dt B - lap B = 0,  div B = 0
//! ```
//!
//! Each Fourier mode splits into a longitudinal acoustic pair
//! `(rho_hat, m_par_hat)`, two transverse momentum components that diffuse at
//! rate `mu |xi|^2`, and a magnetic heat mode.

pub mod quadrature;
pub mod radial;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::{GridSpec, SpectralField, SpectralVectorField};

pub use radial::{linear_norm_quadrature, NormComponent, QuadratureReport, RadialProfile, RadialShape};

type C = Complex64;
const ZERO: C = C { re: 0.0, im: 0.0 };

/// Width of the band around the critical discriminant routed to the series form.
pub const CRITICAL_BAND: f64 = 1e-10;

/// Eigenvalues `-a +- sqrt(a^2 - r^2)` of the acoustic block, `a = (2 mu + nu) r^2 / 2`.
pub fn acoustic_eigenvalues(r: f64, params: &PhysParams) -> [C; 2] {
    let a = 0.5 * params.longitudinal_viscosity() * r * r;
    let disc = C::new(a * a - r * r, 0.0).sqrt();
    [C::new(-a, 0.0) + disc, C::new(-a, 0.0) - disc]
}

/// `exp(t A)` for `A = [[0, -i r], [-i r, -(2 mu + nu) r^2]]`.
pub fn acoustic_mode_matrix(r: f64, params: &PhysParams, t: f64) -> Result<[[C; 2]; 2]> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "acoustic block needs |xi| > 0, got {r}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    Ok(acoustic_matrix_unchecked(r, params.longitudinal_viscosity(), t))
}

/// Damped `cosh` and `sinh/s` factors: returns `(e^{-a t} C, e^{-a t} S)` with
/// `C = cosh(t sqrt(d))`, `S = sinh(t sqrt(d)) / sqrt(d)`, `d = a^2 - r^2`.
fn damped_factors(a: f64, r: f64, t: f64) -> (f64, f64) {
    let disc = a * a - r * r;
    let z = disc * t * t;
    if disc.abs() < CRITICAL_BAND && z.abs() <= 1.0 {
        // Entire-function series in z, exact at the double root.
        let (mut c, mut s) = (0.0, 0.0);
        let mut term_c = 1.0;
        let mut term_s = 1.0;
        for n in 0..30 {
            c += term_c;
            s += term_s;
            let n2 = 2.0 * n as f64;
            term_c *= z / ((n2 + 1.0) * (n2 + 2.0));
            term_s *= z / ((n2 + 2.0) * (n2 + 3.0));
            if term_c.abs() < 1e-18 * c.abs() && term_s.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        let damp = (-a * t).exp();
        (damp * c, damp * s * t)
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        let damp = (-a * t).exp();
        (damp * (w * t).cos(), damp * (w * t).sin() / w)
    } else {
        let s = disc.sqrt();
        if a * t < 700.0 {
            let damp = (-a * t).exp();
            (damp * (s * t).cosh(), damp * (s * t).sinh() / s)
        } else {
            // s - a = -r^2 / (a + s) avoids cancellation for the slow root.
            let slow = (-r * r / (a + s) * t).exp();
            let fast = (-(s + a) * t).exp();
            (0.5 * (slow + fast), 0.5 * (slow - fast) / s)
        }
    }
}

fn acoustic_matrix_unchecked(r: f64, visc: f64, t: f64) -> [[C; 2]; 2] {
    let a = 0.5 * visc * r * r;
    let (ec, es) = damped_factors(a, r, t);
    let off = C::new(0.0, -r * es);
    [
        [C::new(ec + a * es, 0.0), off],
        [off, C::new(ec - a * es, 0.0)],
    ]
}

/// Orthonormal frame `(xi_hat, e1, e2)`; the x axis frame for `xi = 0`.
pub fn mode_frame(xi: [f64; 3]) -> [[f64; 3]; 3] {
    let r = norm3(xi);
    if r == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let n = [xi[0] / r, xi[1] / r, xi[2] / r];
    // cross with the axis least aligned with n
    let axis = (0..3)
        .min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()))
        .unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let c1 = cross(n, e);
    let l1 = norm3(c1);
    let e1 = [c1[0] / l1, c1[1] / l1, c1[2] / l1];
    let e2 = cross(n, e1);
    [n, e1, e2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn project(v: [C; 3], e: [f64; 3]) -> C {
    v[0] * e[0] + v[1] * e[1] + v[2] * e[2]
}

/// One Fourier mode of `(rho, m, B)` in the longitudinal/transverse frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub rho: C,
    pub m_par: C,
    pub m_perp: [C; 2],
    pub b: [C; 3],
}

impl ModeState {
    pub fn from_components(xi: [f64; 3], rho: C, m: [C; 3], b: [C; 3]) -> Self {
        let [n, e1, e2] = mode_frame(xi);
        Self {
            rho,
            m_par: project(m, n),
            m_perp: [project(m, e1), project(m, e2)],
            b,
        }
    }

    /// Cartesian momentum `m_par xi_hat + m_perp`.
    pub fn momentum(&self, xi: [f64; 3]) -> [C; 3] {
        let [n, e1, e2] = mode_frame(xi);
        let mut m = [ZERO; 3];
        for i in 0..3 {
            m[i] = self.m_par * n[i] + self.m_perp[0] * e1[i] + self.m_perp[1] * e2[i];
        }
        m
    }
}

/// Advance one mode by time `t` under the linearized system.
pub fn evolve_linear_mode(mode: &ModeState, xi: [f64; 3], params: &PhysParams, t: f64) -> ModeState {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if r2 == 0.0 {
        return *mode;
    }
    let e = acoustic_matrix_unchecked(r2.sqrt(), params.longitudinal_viscosity(), t);
    let perp = (-params.mu * r2 * t).exp();
    let heat = (-r2 * t).exp();
    ModeState {
        rho: e[0][0] * mode.rho + e[0][1] * mode.m_par,
        m_par: e[1][0] * mode.rho + e[1][1] * mode.m_par,
        m_perp: [mode.m_perp[0] * perp, mode.m_perp[1] * perp],
        b: [mode.b[0] * heat, mode.b[1] * heat, mode.b[2] * heat],
    }
}

/// Spectral `(rho, m, B)` triple on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearState {
    pub varrho: SpectralField,
    pub m: SpectralVectorField,
    pub b: SpectralVectorField,
}

impl LinearState {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            varrho: SpectralField::zeros(grid),
            m: SpectralVectorField::zeros(grid),
            b: SpectralVectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.varrho.grid()
    }

    fn check_grid(&self) -> Result<()> {
        let g = self.grid();
        if self.m.grid() != g || self.b.grid() != g {
            return Err(Error::GridMismatch(
                "density, momentum and magnetic field grids differ".into(),
            ));
        }
        Ok(())
    }
}

/// Per-mode propagator coefficients for a fixed step, reusable across steps.
///
/// Acts on a density-like scalar and a velocity-like vector (the linear
/// operator is the same for `(rho, m)` and `(rho, u)`), plus a magnetic vector.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: GridSpec,
    dt: f64,
    acoustic: Vec<[[C; 2]; 2]>,
    perp: Vec<f64>,
    heat: Vec<f64>,
}

impl LinearPropagator {
    pub fn new(grid: GridSpec, params: &PhysParams, dt: f64) -> Self {
        let visc = params.longitudinal_viscosity();
        let n = grid.spectral_len();
        let mut acoustic = Vec::with_capacity(n);
        let mut perp = Vec::with_capacity(n);
        let mut heat = Vec::with_capacity(n);
        for m in grid.modes() {
            let r2 = m.k_squared();
            if r2 == 0.0 {
                acoustic.push([[C::new(1.0, 0.0), ZERO], [ZERO, C::new(1.0, 0.0)]]);
            } else {
                acoustic.push(acoustic_matrix_unchecked(r2.sqrt(), visc, dt));
            }
            perp.push((-params.mu * r2 * dt).exp());
            heat.push((-r2 * dt).exp());
        }
        Self {
            grid,
            dt,
            acoustic,
            perp,
            heat,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Apply to `(scalar, vector)` in the acoustic/transverse split.
    pub fn apply_fluid(
        &self,
        scalar: &SpectralField,
        vector: &SpectralVectorField,
    ) -> (SpectralField, SpectralVectorField) {
        let g = self.grid;
        let mut s_out = SpectralField::zeros(g);
        let mut v_out = [
            SpectralField::zeros(g),
            SpectralField::zeros(g),
            SpectralField::zeros(g),
        ];
        let vin = vector.components();
        for m in g.modes() {
            let i = m.idx;
            let r2 = m.k_squared();
            let v = [vin[0].coeffs()[i], vin[1].coeffs()[i], vin[2].coeffs()[i]];
            let s = scalar.coeffs()[i];
            if r2 == 0.0 {
                s_out.coeffs_mut()[i] = s;
                for d in 0..3 {
                    v_out[d].coeffs_mut()[i] = v[d];
                }
                continue;
            }
            let r = r2.sqrt();
            let n = [m.k[0] / r, m.k[1] / r, m.k[2] / r];
            let par = project(v, n);
            let e = &self.acoustic[i];
            let s_new = e[0][0] * s + e[0][1] * par;
            let par_new = e[1][0] * s + e[1][1] * par;
            s_out.coeffs_mut()[i] = s_new;
            let p = self.perp[i];
            for d in 0..3 {
                v_out[d].coeffs_mut()[i] = (v[d] - par * n[d]) * p + par_new * n[d];
            }
        }
        (s_out, SpectralVectorField::new(v_out).expect("same grid"))
    }

    pub fn apply_magnetic(&self, b: &SpectralVectorField) -> SpectralVectorField {
        let [a, bb, c] = b.components();
        let h = |f: &SpectralField| {
            let mut out = f.clone();
            for (v, &e) in out.coeffs_mut().iter_mut().zip(&self.heat) {
                *v *= e;
            }
            out
        };
        SpectralVectorField::with_flag([h(a), h(bb), h(c)], b.is_solenoidal())
    }
}

/// Advance every grid mode of `(rho, m, B)` by time `t`.
pub fn evolve_linear_on_grid(initial: &LinearState, params: &PhysParams, t: f64) -> Result<LinearState> {
    initial.check_grid()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let prop = LinearPropagator::new(initial.grid(), params, t);
    let (varrho, m) = prop.apply_fluid(&initial.varrho, &initial.m);
    let [a, b, c] = initial.b.components();
    let h = |f: &SpectralField| {
        let mut out = f.clone();
        for (v, &e) in out.coeffs_mut().iter_mut().zip(&prop.heat) {
            *v *= e;
        }
        out
    };
    let b = SpectralVectorField::with_flag([h(a), h(b), h(c)], initial.b.is_solenoidal());
    Ok(LinearState { varrho, m, b })
}

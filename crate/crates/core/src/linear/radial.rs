//! Whole-space norms of the linear solution for isotropic initial data.
//!
//! For radial data the squared norm reduces to
//! `||grad^k U(t)||^2 = 4 pi int_0^inf r^{2k+2} |U_hat(r, t)|^2 dr`.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use super::acoustic_matrix_unchecked;
use crate::error::{Error, Result};
use crate::params::PhysParams;

const REL_TOL: f64 = 1e-10;
const TAIL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 40_000;
const MAX_RADIUS: f64 = 1e8;

/// Closed-form or sampled radial amplitude `f(r)`, `r = |xi|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RadialShape {
    Zero,
    /// `amp` on `[0, radius]`, zero beyond.
    Indicator { amp: f64, radius: f64 },
    /// Smooth cutoff: `amp` on `[0, rc]`, decreasing to zero on `[rc, 2 rc]`.
    Bump { amp: f64, rc: f64 },
    /// `amp min(1, r^eta) exp(-sigma^2 r^2 / 2)`.
    PowerGaussian { amp: f64, eta: f64, sigma: f64 },
    /// `amp r^exponent`, no decay.
    Power { amp: f64, exponent: f64 },
    /// Piecewise linear through `(r, values)`, zero past the last node.
    Sampled { r: Vec<f64>, values: Vec<f64> },
}

fn smooth_step(s: f64) -> f64 {
    // 0 for s <= 0, 1 for s >= 1, C-infinity in between
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = f(s);
    let b = f(1.0 - s);
    if a + b == 0.0 {
        return 0.0;
    }
    a / (a + b)
}

impl RadialShape {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialShape::Zero => 0.0,
            RadialShape::Indicator { amp, radius } => {
                if r <= *radius {
                    *amp
                } else {
                    0.0
                }
            }
            RadialShape::Bump { amp, rc } => amp * smooth_step((2.0 * rc - r) / rc),
            RadialShape::PowerGaussian { amp, eta, sigma } => {
                let p = if r >= 1.0 { 1.0 } else { r.powf(*eta) };
                amp * p * (-0.5 * sigma * sigma * r * r).exp()
            }
            RadialShape::Power { amp, exponent } => amp * r.powf(*exponent),
            RadialShape::Sampled { r: nodes, values } => {
                if nodes.is_empty() || r > *nodes.last().unwrap() {
                    return 0.0;
                }
                let i = nodes.partition_point(|&x| x <= r);
                if i == 0 {
                    return values[0];
                }
                if i == nodes.len() {
                    return *values.last().unwrap();
                }
                let (x0, x1) = (nodes[i - 1], nodes[i]);
                let w = (r - x0) / (x1 - x0);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
        }
    }

    /// Radius beyond which the shape vanishes, if any.
    pub fn support(&self) -> Option<f64> {
        match self {
            RadialShape::Zero => Some(0.0),
            RadialShape::Indicator { radius, .. } => Some(*radius),
            RadialShape::Bump { rc, .. } => Some(2.0 * rc),
            RadialShape::Sampled { r, .. } => Some(r.last().copied().unwrap_or(0.0)),
            RadialShape::PowerGaussian { .. } | RadialShape::Power { .. } => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialShape::Zero => vec![],
            RadialShape::Indicator { radius, .. } => vec![*radius],
            RadialShape::Bump { rc, .. } => vec![*rc, 1.5 * rc, 2.0 * rc],
            RadialShape::PowerGaussian { sigma, .. } => {
                let mut b = vec![1.0];
                if *sigma > 0.0 {
                    b.extend([1.0 / sigma, 3.0 / sigma, 6.0 / sigma]);
                }
                b
            }
            RadialShape::Power { .. } => vec![1.0],
            RadialShape::Sampled { r, .. } => r.clone(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("{name} profile: {msg}")));
        match self {
            RadialShape::Zero => Ok(()),
            RadialShape::Indicator { amp, radius } => {
                if !amp.is_finite() || !(*radius > 0.0) || !radius.is_finite() {
                    return bad(format!("indicator needs finite amp and radius > 0, got {amp}, {radius}"));
                }
                Ok(())
            }
            RadialShape::Bump { amp, rc } => {
                if !amp.is_finite() || !(*rc > 0.0) || !rc.is_finite() {
                    return bad(format!("bump needs finite amp and rc > 0, got {amp}, {rc}"));
                }
                Ok(())
            }
            RadialShape::PowerGaussian { amp, eta, sigma } => {
                if !amp.is_finite() || !(*eta >= 0.0) || !(*sigma >= 0.0) {
                    return bad(format!("power-gaussian needs eta >= 0 and sigma >= 0, got {eta}, {sigma}"));
                }
                Ok(())
            }
            RadialShape::Power { amp, exponent } => {
                if !amp.is_finite() || !exponent.is_finite() {
                    return bad("power shape needs finite parameters".into());
                }
                Ok(())
            }
            RadialShape::Sampled { r, values } => {
                if r.len() != values.len() || r.len() < 2 {
                    return bad("sampled shape needs matching node and value arrays of length >= 2".into());
                }
                if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("sampled radii must be nonnegative and strictly increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("sampled values must be finite".into());
                }
                Ok(())
            }
        }
    }
}

/// Isotropic initial data for the linear system: amplitudes of `rho_hat`,
/// the longitudinal and transverse parts of `m_hat`, and `|b_hat|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub rho: RadialShape,
    pub m_par: RadialShape,
    pub m_perp: RadialShape,
    pub b: RadialShape,
    /// Low-frequency floor.
    pub c0: f64,
    /// Radius of the floor region.
    pub cutoff: f64,
    /// High-frequency growth exponent allowed by the hypothesis `|f_hat| <= C |xi|^eta`.
    pub eta: f64,
}

impl RadialProfile {
    /// Smooth bump of height `c0` with `rc = 1` in density and magnetic field,
    /// zero momentum.
    pub fn lower_bound_default(c0: f64) -> Self {
        let bump = RadialShape::Bump { amp: c0, rc: 1.0 };
        Self {
            rho: bump.clone(),
            m_par: RadialShape::Zero,
            m_perp: RadialShape::Zero,
            b: bump,
            c0,
            cutoff: 1.0,
            eta: 0.0,
        }
    }

    /// Indicator of the unit ball with height `c0` in density and field.
    pub fn indicator(c0: f64) -> Self {
        let ind = RadialShape::Indicator { amp: c0, radius: 1.0 };
        Self {
            rho: ind.clone(),
            m_par: RadialShape::Zero,
            m_perp: RadialShape::Zero,
            b: ind,
            c0,
            cutoff: 1.0,
            eta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.validate("density")?;
        self.m_par.validate("longitudinal momentum")?;
        self.m_perp.validate("transverse momentum")?;
        self.b.validate("magnetic")?;
        if !(self.c0 >= 0.0) || !(self.cutoff >= 0.0) || !(self.eta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile needs c0 >= 0, cutoff >= 0, eta >= 0, got {}, {}, {}",
                self.c0, self.cutoff, self.eta
            )));
        }
        Ok(())
    }

    /// Check the floor `|rho_hat|, |b_hat| >= c0` and `m_hat = 0` on `[0, cutoff]`
    /// at `samples` evenly spaced radii.
    pub fn satisfies_lower_bound(&self, samples: usize) -> bool {
        (0..=samples).all(|i| {
            let r = self.cutoff * i as f64 / samples.max(1) as f64;
            self.rho.eval(r).abs() >= self.c0
                && self.b.eval(r).abs() >= self.c0
                && self.m_par.eval(r) == 0.0
                && self.m_perp.eval(r) == 0.0
        })
    }

    fn shapes(&self) -> [&RadialShape; 4] {
        [&self.rho, &self.m_par, &self.m_perp, &self.b]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormComponent {
    Density,
    Momentum,
    Magnetic,
}

impl NormComponent {
    pub fn name(self) -> &'static str {
        match self {
            NormComponent::Density => "density",
            NormComponent::Momentum => "momentum",
            NormComponent::Magnetic => "magnetic",
        }
    }
}

/// Spectral energy density `|U_hat(r, t)|^2` of one component.
pub fn spectral_density(
    profile: &RadialProfile,
    component: NormComponent,
    params: &PhysParams,
    r: f64,
    t: f64,
) -> f64 {
    match component {
        NormComponent::Magnetic => {
            let b = profile.b.eval(r);
            b * b * (-2.0 * r * r * t).exp()
        }
        NormComponent::Density | NormComponent::Momentum => {
            let rho = profile.rho.eval(r);
            let mp = profile.m_par.eval(r);
            let (par, perp_amp) = if r == 0.0 {
                if component == NormComponent::Density {
                    return rho * rho;
                }
                (mp * mp, profile.m_perp.eval(r))
            } else {
                let e = acoustic_matrix_unchecked(r, params.longitudinal_viscosity(), t);
                let row = if component == NormComponent::Density { 0 } else { 1 };
                let v = e[row][0] * rho + e[row][1] * mp;
                if component == NormComponent::Density {
                    return v.norm_sqr();
                }
                (v.norm_sqr(), profile.m_perp.eval(r) * (-params.mu * r * r * t).exp())
            };
            par + perp_amp * perp_amp
        }
    }
}

/// Quadrature value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub norm: f64,
    pub norm_squared: f64,
    /// Absolute error estimate of `norm_squared`, quadrature plus tail.
    pub error_squared: f64,
    /// Truncation radius.
    pub radius: f64,
    pub evaluations: usize,
}

impl NormEstimate {
    /// Error estimate transferred to the norm.
    pub fn error(&self) -> f64 {
        if self.norm > 0.0 {
            self.error_squared / (2.0 * self.norm)
        } else {
            self.error_squared.sqrt()
        }
    }
}

fn check_origin_integrability(profile: &RadialProfile, component: NormComponent, k: u32) -> Result<()> {
    let relevant: Vec<&RadialShape> = match component {
        NormComponent::Magnetic => vec![&profile.b],
        _ => vec![&profile.rho, &profile.m_par, &profile.m_perp],
    };
    for s in relevant {
        if let RadialShape::Power { amp, exponent } = s {
            // r^{2k + 2 + 2p} integrable at 0 iff 2k + 2 + 2p > -1
            if *amp != 0.0 && 2.0 * k as f64 + 2.0 + 2.0 * exponent <= -1.0 {
                return Err(Error::Quadrature(format!(
                    "profile r^{exponent} is not square integrable at the origin for k = {k}"
                )));
            }
        }
    }
    Ok(())
}

/// `||grad^k U(t)||_{L^2(R^3)}` with the full error report.
pub fn linear_norm_estimate(
    profile: &RadialProfile,
    component: NormComponent,
    k: u32,
    params: &PhysParams,
    t: f64,
    rel_tol: f64,
) -> Result<NormEstimate> {
    profile.validate()?;
    params.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    check_origin_integrability(profile, component, k)?;
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let w = r.powi(2 * k as i32 + 2);
        4.0 * std::f64::consts::PI * w * spectral_density(profile, component, params, r, t)
    };

    let mut breaks: Vec<f64> = vec![0.0];
    for s in profile.shapes() {
        breaks.extend(s.breakpoints());
    }
    if t > 0.0 {
        // heat-kernel scales e^{-r^2 t}
        let h = 1.0 / t.sqrt();
        breaks.extend([0.25, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|c| c * h));
    }
    let compact = profile
        .shapes()
        .iter()
        .map(|s| s.support())
        .try_fold(0.0f64, |acc, s| s.map(|v| acc.max(v)));
    let mut radius = match compact {
        Some(r) => r,
        None => breaks.iter().copied().fold(1.0, f64::max),
    };
    breaks.retain(|&b| b.is_finite() && b >= 0.0 && b <= radius);
    breaks.push(radius);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let tol = rel_tol.min(REL_TOL);
    let mut total = integrate(integrand, &breaks, tol, 1e-300, MAX_PANELS);
    let mut tail_err = 0.0;
    if compact.is_none() {
        loop {
            let piece = integrate(integrand, &[radius, 2.0 * radius], tol, 1e-300, MAX_PANELS);
            total.value += piece.value;
            total.error += piece.error;
            total.evaluations += piece.evaluations;
            radius *= 2.0;
            if piece.value.abs() <= TAIL_TOL * total.value.abs() {
                // geometric tail bound from the last doubling
                tail_err = piece.value.abs();
                break;
            }
            if radius > MAX_RADIUS || !total.value.is_finite() {
                return Err(Error::Quadrature(format!(
                    "{} profile is not integrable: tail does not vanish by r = {radius:.3e}",
                    component.name()
                )));
            }
        }
    }
    if !total.value.is_finite() {
        return Err(Error::Quadrature(format!(
            "{} integrand produced a non-finite value",
            component.name()
        )));
    }
    let value = total.value.max(0.0);
    Ok(NormEstimate {
        norm: value.sqrt(),
        norm_squared: value,
        error_squared: total.error + tail_err,
        radius,
        evaluations: total.evaluations,
    })
}

/// `||grad^k U(t)||_{L^2(R^3)}` to relative accuracy `1e-8`.
pub fn linear_norm_quadrature(
    profile: &RadialProfile,
    component: NormComponent,
    k: u32,
    params: &PhysParams,
    t: f64,
) -> Result<f64> {
    linear_norm_estimate(profile, component, k, params, t, 1e-8).map(|e| e.norm)
}

/// Norm series over a time grid, serialized as the quadrature report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub component: NormComponent,
    pub k: u32,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub errors: Vec<f64>,
}

impl QuadratureReport {
    pub fn compute(
        profile: &RadialProfile,
        component: NormComponent,
        k: u32,
        params: &PhysParams,
        times: &[f64],
    ) -> Result<Self> {
        use rayon::prelude::*;
        let est: Vec<NormEstimate> = times
            .par_iter()
            .map(|&t| linear_norm_estimate(profile, component, k, params, t, 1e-8))
            .collect::<Result<_>>()?;
        Ok(Self {
            component,
            k,
            times: times.to_vec(),
            norms: est.iter().map(|e| e.norm).collect(),
            errors: est.iter().map(|e| e.error()).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

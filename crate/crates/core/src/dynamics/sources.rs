use rayon::prelude::*;

use super::State;
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::spectral::ops::{curl, dealias, divergence, gradient, laplacian, partial};
use crate::spectral::{GridSpec, SpectralField, SpectralVectorField};

/// Right-hand sides `(G1, G2, G3)` of the `u`-form.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSources {
    pub g1: SpectralField,
    pub g2: SpectralVectorField,
    pub g3: SpectralVectorField,
}

/// Fluxes of the conservative form: `m_t - ... = -div S1`, `B_t - lap B = curl S2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearFluxes {
    /// `s1[i][j] = S1_ij`.
    pub s1: [[SpectralField; 3]; 3],
    pub s2: SpectralVectorField,
}

pub(crate) struct SourceStats {
    pub max_speed: f64,
}

fn inverse_all(fields: &[&SpectralField]) -> Vec<Vec<f64>> {
    fields.par_iter().map(|f| f.to_physical()).collect()
}

fn forward_all(grid: GridSpec, values: &[Vec<f64>]) -> Vec<SpectralField> {
    values
        .par_iter()
        .map(|v| dealias(&SpectralField::from_physical(grid, v).expect("same grid")))
        .collect()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn vacuum_check(min_density: f64, guard: f64) -> Result<()> {
    if !(min_density > guard) {
        return Err(Error::Vacuum {
            min: min_density,
            guard,
        });
    }
    Ok(())
}

/// `G1, G2` and, when `b` is present, `G3`. With `b = None` the magnetic
/// field is absent from the system altogether.
pub fn fluid_sources(
    varrho: &SpectralField,
    u: &SpectralVectorField,
    b: Option<&SpectralVectorField>,
    params: &PhysParams,
    vacuum_guard: f64,
) -> Result<(SpectralField, SpectralVectorField, Option<SpectralVectorField>)> {
    let (g1, g2, g3, _) = sources_with_stats(varrho, u, b, params, vacuum_guard)?;
    Ok((g1, g2, g3))
}

pub(crate) fn sources_with_stats(
    varrho: &SpectralField,
    u: &SpectralVectorField,
    b: Option<&SpectralVectorField>,
    params: &PhysParams,
    vacuum_guard: f64,
) -> Result<(SpectralField, SpectralVectorField, Option<SpectralVectorField>, SourceStats)> {
    let grid = varrho.grid();
    let grad_rho = gradient(varrho);
    let div_u = divergence(u);
    let grad_div = gradient(&div_u);
    let mu = params.mu;
    let lam = params.mu + params.nu;
    let visc: Vec<SpectralField> = (0..3)
        .map(|i| &laplacian(u.component(i)).scale(mu) + &grad_div.component(i).scale(lam))
        .collect();
    // du[i][j] = d_i u_j
    let du: Vec<SpectralField> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| partial(u.component(j), i))
        .collect();
    let curl_b = b.map(curl);

    let mut spectral: Vec<&SpectralField> = vec![varrho];
    spectral.extend(u.components());
    spectral.extend(grad_rho.components());
    spectral.extend(visc.iter());
    spectral.extend(du.iter());
    if let (Some(b), Some(j)) = (b, curl_b.as_ref()) {
        spectral.extend(b.components());
        spectral.extend(j.components());
    }
    let phys = inverse_all(&spectral);
    let rho = &phys[0];
    let uu = &phys[1..4];
    let gr = &phys[4..7];
    let vs = &phys[7..10];
    let dv = &phys[10..19];
    let mag = if b.is_some() { Some((&phys[19..22], &phys[22..25])) } else { None };

    let min_density = rho.iter().fold(f64::INFINITY, |m, &r| m.min(1.0 + r));
    vacuum_check(min_density, vacuum_guard)?;
    let max_speed = (0..grid.physical_len())
        .into_par_iter()
        .map(|p| (uu[0][p].powi(2) + uu[1][p].powi(2) + uu[2][p].powi(2)).sqrt())
        .reduce(|| 0.0, f64::max);

    let hall = if params.hall_enabled { 1.0 } else { 0.0 };
    let n = grid.physical_len();
    let pointwise = |p: usize| -> [f64; 7] {
        let r = rho[p];
        let inv = 1.0 / (1.0 + r);
        let uv = [uu[0][p], uu[1][p], uu[2][p]];
        let div = dv[0][p] + dv[4][p] + dv[8][p];
        let g1 = -r * div - (uv[0] * gr[0][p] + uv[1] * gr[1][p] + uv[2] * gr[2][p]);
        let pc = params.pressure_correction(r);
        let mut g2 = [0.0; 3];
        for (i, g) in g2.iter_mut().enumerate() {
            let adv = uv[0] * dv[i][p] + uv[1] * dv[3 + i][p] + uv[2] * dv[6 + i][p];
            *g = -adv + (inv - 1.0) * vs[i][p] - pc * gr[i][p];
        }
        let mut e = [0.0; 3];
        if let Some((bb, jj)) = mag {
            let bv = [bb[0][p], bb[1][p], bb[2][p]];
            let jv = [jj[0][p], jj[1][p], jj[2][p]];
            let lorentz = cross(jv, bv);
            let ub = cross(uv, bv);
            for i in 0..3 {
                g2[i] += lorentz[i] * inv;
                e[i] = ub[i] - hall * lorentz[i] * inv;
            }
        }
        [g1, g2[0], g2[1], g2[2], e[0], e[1], e[2]]
    };
    let vals: Vec<[f64; 7]> = (0..n).into_par_iter().map(pointwise).collect();
    let nout = if b.is_some() { 7 } else { 4 };
    let outs: Vec<Vec<f64>> = (0..nout).map(|c| vals.iter().map(|v| v[c]).collect()).collect();
    let mut spec = forward_all(grid, &outs).into_iter();
    let g1 = spec.next().unwrap();
    let g2 = SpectralVectorField::new([spec.next().unwrap(), spec.next().unwrap(), spec.next().unwrap()])?;
    let g3 = if b.is_some() {
        let e = SpectralVectorField::new([spec.next().unwrap(), spec.next().unwrap(), spec.next().unwrap()])?;
        Some(curl(&e))
    } else {
        None
    };
    Ok((
        g1,
        g2,
        g3,
        SourceStats { max_speed },
    ))
}

/// Nonlinear sources with the default vacuum guard.
pub fn compute_g(state: &State, params: &PhysParams) -> Result<NonlinearSources> {
    params.validate()?;
    let (g1, g2, g3) = fluid_sources(&state.varrho, &state.u, Some(&state.b), params, super::DEFAULT_VACUUM_GUARD)?;
    Ok(NonlinearSources {
        g1,
        g2,
        g3: g3.expect("magnetic field present"),
    })
}

/// Conservative-form fluxes `S1, S2`.
pub fn compute_s(state: &State, params: &PhysParams) -> Result<NonlinearFluxes> {
    params.validate()?;
    let grid = state.grid();
    let mu = params.mu;
    let lam = params.mu + params.nu;
    let j = curl(&state.b);
    let mut spectral: Vec<&SpectralField> = vec![&state.varrho];
    spectral.extend(state.u.components());
    spectral.extend(state.b.components());
    spectral.extend(j.components());
    let phys = inverse_all(&spectral);
    let rho = &phys[0];
    let uu = &phys[1..4];
    let bb = &phys[4..7];
    let jj = &phys[7..10];
    let min_density = rho.iter().fold(f64::INFINITY, |m, &r| m.min(1.0 + r));
    vacuum_check(min_density, super::DEFAULT_VACUUM_GUARD)?;

    // q = varrho u, then d_i q_j and div q
    let q: Vec<Vec<f64>> = (0..3)
        .map(|c| rho.iter().zip(&uu[c]).map(|(r, v)| r * v).collect())
        .collect();
    let q_hat = forward_all(grid, &q);
    let div_q = &(&partial(&q_hat[0], 0) + &partial(&q_hat[1], 1)) + &partial(&q_hat[2], 2);
    let dq: Vec<SpectralField> = (0..9).map(|ij| partial(&q_hat[ij % 3], ij / 3)).collect();
    let mut spectral2: Vec<&SpectralField> = dq.iter().collect();
    spectral2.push(&div_q);
    let dq_phys = inverse_all(&spectral2);

    let n = grid.physical_len();
    let hall = if params.hall_enabled { 1.0 } else { 0.0 };
    let vals: Vec<[f64; 12]> = (0..n)
        .into_par_iter()
        .map(|p| {
            let r = rho[p];
            let uv = [uu[0][p], uu[1][p], uu[2][p]];
            let bv = [bb[0][p], bb[1][p], bb[2][p]];
            let iso = lam * dq_phys[9][p]
                + params.pressure_remainder(r)
                + 0.5 * (bv[0] * bv[0] + bv[1] * bv[1] + bv[2] * bv[2]);
            let mut out = [0.0; 12];
            for i in 0..3 {
                for jx in 0..3 {
                    let mut s = (1.0 + r) * uv[i] * uv[jx] + mu * dq_phys[3 * i + jx][p] - bv[i] * bv[jx];
                    if i == jx {
                        s += iso;
                    }
                    out[3 * i + jx] = s;
                }
            }
            let lorentz = cross([jj[0][p], jj[1][p], jj[2][p]], bv);
            let ub = cross(uv, bv);
            for i in 0..3 {
                out[9 + i] = ub[i] - hall * lorentz[i] / (1.0 + r);
            }
            out
        })
        .collect();
    let outs: Vec<Vec<f64>> = (0..12).map(|c| vals.iter().map(|v| v[c]).collect()).collect();
    let mut spec = forward_all(grid, &outs).into_iter();
    let mut next = || spec.next().unwrap();
    let s1 = [[next(), next(), next()], [next(), next(), next()], [next(), next(), next()]];
    let s2 = SpectralVectorField::new([next(), next(), next()])?;
    Ok(NonlinearFluxes { s1, s2 })
}

/// `(div T)_j = sum_i d_i T_ij`.
pub fn tensor_divergence(t: &[[SpectralField; 3]; 3]) -> SpectralVectorField {
    let comp = |j: usize| {
        let mut acc = partial(&t[0][j], 0);
        for (i, row) in t.iter().enumerate().skip(1) {
            acc = &acc + &partial(&row[j], i);
        }
        acc
    };
    SpectralVectorField::new([comp(0), comp(1), comp(2)]).expect("same grid")
}

/// Right-hand sides evaluated from the equations, no time differencing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDerivatives {
    pub rho_t: SpectralField,
    pub u_t: SpectralVectorField,
    pub b_t: SpectralVectorField,
    pub div_u: SpectralField,
}

pub fn time_derivatives(state: &State, params: &PhysParams) -> Result<TimeDerivatives> {
    let g = compute_g(state, params)?;
    let div_u = divergence(&state.u);
    let rho_t = &g.g1 - &div_u;
    let grad_div = gradient(&div_u);
    let grad_rho = gradient(&state.varrho);
    let lam = params.mu + params.nu;
    let u_t: Vec<SpectralField> = (0..3)
        .map(|i| {
            let lin = &(&laplacian(state.u.component(i)).scale(params.mu) + &grad_div.component(i).scale(lam))
                - grad_rho.component(i);
            &lin + g.g2.component(i)
        })
        .collect();
    let b_t: Vec<SpectralField> = (0..3)
        .map(|i| &laplacian(state.b.component(i)) + g.g3.component(i))
        .collect();
    let [u0, u1, u2]: [SpectralField; 3] = u_t.try_into().expect("three components");
    let [b0, b1, b2]: [SpectralField; 3] = b_t.try_into().expect("three components");
    Ok(TimeDerivatives {
        rho_t,
        u_t: SpectralVectorField::new([u0, u1, u2])?,
        b_t: SpectralVectorField::new([b0, b1, b2])?,
        div_u,
    })
}

/// `L^2` norms of the time derivatives, plus `L^2_gamma` norms when `gamma` is given.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeDerivativeNorms {
    pub rho_t: f64,
    pub u_t: f64,
    pub b_t: f64,
    pub div_u: f64,
    pub weighted: Option<[f64; 4]>,
}

pub fn time_derivative_norms(state: &State, params: &PhysParams, gamma: Option<f64>) -> Result<TimeDerivativeNorms> {
    let d = time_derivatives(state, params)?;
    let weighted = match gamma {
        Some(g) => {
            let spec = crate::weighted::WeightedNormSpec::new(g)?;
            Some([
                crate::weighted::weighted_l2_norm(&d.rho_t, &spec)?,
                crate::weighted::weighted_vector_norm(&d.u_t, &spec)?,
                crate::weighted::weighted_vector_norm(&d.b_t, &spec)?,
                crate::weighted::weighted_l2_norm(&d.div_u, &spec)?,
            ])
        }
        None => None,
    };
    Ok(TimeDerivativeNorms {
        rho_t: d.rho_t.l2_norm(),
        u_t: d.u_t.l2_norm(),
        b_t: d.b_t.l2_norm(),
        div_u: d.div_u.l2_norm(),
        weighted,
    })
}

use std::fmt::Write as _;

use super::sources::sources_with_stats;
use super::State;
use crate::error::{Error, Result};
use crate::linear::LinearPropagator;
use crate::params::PhysParams;
use crate::spectral::ops::{dealias, dealias_vector, leray_project};
use crate::spectral::{GridSpec, SpectralField, SpectralVectorField};

pub const DEFAULT_C_ADV: f64 = 0.5;
pub const DEFAULT_VACUUM_GUARD: f64 = 1e-3;

/// Two-stage exponential integrator with the linear part solved exactly:
///
/// ```text
/// U*      = E(dt) [U_n + dt N(U_n)]
/// U_{n+1} = E(dt) [U_n + dt/2 N(U_n)] + dt/2 N(U*)
/// ```
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PhysParams,
    propagator: LinearPropagator,
    pub c_adv: f64,
    pub vacuum_guard: f64,
}

struct Rhs {
    g1: SpectralField,
    g2: SpectralVectorField,
    g3: Option<SpectralVectorField>,
}

fn axpy(x: &SpectralField, a: f64, y: &SpectralField) -> SpectralField {
    x + &y.scale(a)
}

fn axpy_vec(x: &SpectralVectorField, a: f64, y: &SpectralVectorField) -> SpectralVectorField {
    let c = |i: usize| axpy(x.component(i), a, y.component(i));
    SpectralVectorField::new([c(0), c(1), c(2)]).expect("same grid")
}

impl Stepper {
    pub fn new(grid: GridSpec, params: &PhysParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            params: *params,
            propagator: LinearPropagator::new(grid, params, dt),
            c_adv: DEFAULT_C_ADV,
            vacuum_guard: DEFAULT_VACUUM_GUARD,
        })
    }

    pub fn dt(&self) -> f64 {
        self.propagator.dt()
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn grid(&self) -> GridSpec {
        self.propagator.grid()
    }

    fn rhs(
        &self,
        varrho: &SpectralField,
        u: &SpectralVectorField,
        b: Option<&SpectralVectorField>,
        check_cfl: bool,
    ) -> Result<Rhs> {
        let (g1, g2, g3, stats) = sources_with_stats(varrho, u, b, &self.params, self.vacuum_guard)?;
        if check_cfl && stats.max_speed > 0.0 {
            let limit = self.c_adv * self.grid().dx() / stats.max_speed;
            if self.dt() > limit {
                return Err(Error::Cfl { dt: self.dt(), limit });
            }
        }
        Ok(Rhs { g1, g2, g3 })
    }

    fn advance(
        &self,
        varrho: &SpectralField,
        u: &SpectralVectorField,
        b: Option<&SpectralVectorField>,
    ) -> Result<(SpectralField, SpectralVectorField, Option<SpectralVectorField>)> {
        if varrho.grid() != self.grid() {
            return Err(Error::GridMismatch("state grid differs from the stepper grid".into()));
        }
        let dt = self.dt();
        let p = &self.propagator;
        let n0 = self.rhs(varrho, u, b, true)?;

        let (r_pre, u_pre) = p.apply_fluid(&axpy(varrho, dt, &n0.g1), &axpy_vec(u, dt, &n0.g2));
        let (r_half, u_half) = p.apply_fluid(&axpy(varrho, 0.5 * dt, &n0.g1), &axpy_vec(u, 0.5 * dt, &n0.g2));
        let (b_pre, b_half) = match (b, &n0.g3) {
            (Some(b), Some(g3)) => (
                Some(p.apply_magnetic(&axpy_vec(b, dt, g3))),
                Some(p.apply_magnetic(&axpy_vec(b, 0.5 * dt, g3))),
            ),
            _ => (None, None),
        };
        let n1 = self.rhs(&r_pre, &u_pre, b_pre.as_ref(), false)?;
        let r_new = dealias(&axpy(&r_half, 0.5 * dt, &n1.g1));
        let u_new = dealias_vector(&axpy_vec(&u_half, 0.5 * dt, &n1.g2));
        let b_new = match (b_half, &n1.g3) {
            (Some(bh), Some(g3)) => Some(leray_project(&dealias_vector(&axpy_vec(&bh, 0.5 * dt, g3)))),
            _ => None,
        };
        Ok((r_new, u_new, b_new))
    }

    /// One step of the full system.
    pub fn step(&self, state: &State) -> Result<State> {
        let (varrho, u, b) = self.advance(&state.varrho, &state.u, Some(&state.b))?;
        let next = State {
            varrho,
            u,
            b: b.expect("magnetic field present"),
            t: state.t + self.dt(),
        };
        if let Some(field) = next.non_finite_field() {
            return Err(Error::Divergence {
                field: field.into(),
                time: next.t,
            });
        }
        Ok(next)
    }

    /// One step of the barotropic Navier-Stokes system, the magnetic field
    /// removed from the equations.
    pub fn step_navier_stokes(
        &self,
        varrho: &SpectralField,
        u: &SpectralVectorField,
        t: f64,
    ) -> Result<(SpectralField, SpectralVectorField)> {
        let (r, v, _) = self.advance(varrho, u, None)?;
        if !r.is_finite() || !v.is_finite() {
            return Err(Error::Divergence {
                field: if r.is_finite() { "u" } else { "varrho" }.into(),
                time: t + self.dt(),
            });
        }
        Ok((r, v))
    }
}

/// When observers are invoked during an evolution. The initial and final
/// states are always observed.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    EverySteps(usize),
    /// Observe at the first step reaching each listed time.
    Times(Vec<f64>),
}

impl Schedule {
    fn due(&self, step: usize, t_prev: f64, t: f64) -> bool {
        match self {
            Schedule::EverySteps(k) => *k > 0 && step % k == 0,
            Schedule::Times(ts) => ts.iter().any(|&s| s > t_prev + 1e-12 && s <= t + 1e-12),
        }
    }
}

/// Read-only consumer of states during an evolution.
pub trait Observer {
    fn observe(&mut self, state: &State) -> Result<()>;
}

/// Advance `state` to `t_end`. The last step is shortened when `t_end - t`
/// is not a multiple of the stepper's `dt`.
pub fn evolve(
    mut state: State,
    stepper: &Stepper,
    t_end: f64,
    schedule: &Schedule,
    observers: &mut [&mut dyn Observer],
) -> Result<State> {
    if !(t_end > state.t) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must exceed the current time {}",
            state.t
        )));
    }
    for o in observers.iter_mut() {
        o.observe(&state)?;
    }
    let dt = stepper.dt();
    let full = ((t_end - state.t) / dt * (1.0 + 1e-12)).floor() as usize;
    let t0 = state.t;
    let mut step = 0;
    while step < full {
        let t_prev = state.t;
        let mut next = stepper.step(&state)?;
        step += 1;
        next.t = t0 + step as f64 * dt;
        state = next;
        let last = step == full && (t_end - state.t) <= 1e-9 * dt;
        if last || schedule.due(step, t_prev, state.t) {
            for o in observers.iter_mut() {
                o.observe(&state)?;
            }
        }
    }
    let rest = t_end - state.t;
    if rest > 1e-9 * dt {
        let mut tail = Stepper::new(stepper.grid(), stepper.params(), rest)?;
        tail.c_adv = stepper.c_adv;
        tail.vacuum_guard = stepper.vacuum_guard;
        let mut next = tail.step(&state)?;
        next.t = t_end;
        state = next;
        for o in observers.iter_mut() {
            o.observe(&state)?;
        }
    }
    Ok(state)
}

/// Named columns sampled in time. Column 0 is `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(names: impl IntoIterator<Item = String>) -> Self {
        let mut columns = vec!["t".to_string()];
        columns.extend(names);
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty time series".into()))?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", ln + 2)))?;
            if row.len() != columns.len() {
                return Err(Error::Format(format!("line {}: wrong number of values", ln + 2)));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

/// A group of diagnostics evaluated together on each observed state.
pub struct Probe {
    pub names: Vec<String>,
    pub eval: Box<dyn FnMut(&State) -> Result<Vec<f64>> + Send>,
}

impl Probe {
    pub fn new(
        names: impl IntoIterator<Item = impl Into<String>>,
        eval: impl FnMut(&State) -> Result<Vec<f64>> + Send + 'static,
    ) -> Self {
        Self {
            names: names.into_iter().map(Into::into).collect(),
            eval: Box::new(eval),
        }
    }

    pub fn single(name: impl Into<String>, f: impl Fn(&State) -> f64 + Send + 'static) -> Self {
        Self::new([name.into()], move |s| Ok(vec![f(s)]))
    }
}

/// Observer appending one row of probe values per observed state.
pub struct NormRecorder {
    probes: Vec<Probe>,
    series: TimeSeries,
}

impl NormRecorder {
    pub fn new(probes: Vec<Probe>) -> Self {
        let names = probes.iter().flat_map(|p| p.names.clone());
        Self {
            series: TimeSeries::new(names),
            probes,
        }
    }

    /// `L^2` norms of each variable, `||grad B||`, `||grad^2 B||` and the mean density.
    pub fn basic() -> Self {
        use crate::spectral::vector_seminorm;
        Self::new(vec![
            Probe::single("rho_l2", |s| s.varrho.l2_norm()),
            Probe::single("u_l2", |s| s.u.l2_norm()),
            Probe::single("b_l2", |s| s.b.l2_norm()),
            Probe::single("grad_b_l2", |s| vector_seminorm(&s.b, 1.0)),
            Probe::single("grad2_b_l2", |s| vector_seminorm(&s.b, 2.0)),
            Probe::single("rho_mean", |s| s.varrho.mean()),
        ])
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_series(self) -> TimeSeries {
        self.series
    }
}

impl Observer for NormRecorder {
    fn observe(&mut self, state: &State) -> Result<()> {
        let mut row = vec![state.t];
        for p in &mut self.probes {
            let vals = (p.eval)(state)?;
            if vals.len() != p.names.len() {
                return Err(Error::InvalidArgument(format!(
                    "probe {:?} returned {} values",
                    p.names,
                    vals.len()
                )));
            }
            row.extend(vals);
        }
        self.series.push(row)
    }
}

/// Tracks `sup_t ||(varrho, u, B)(t)||_{H^3}` relative to the initial value.
#[derive(Debug, Clone, Default)]
pub struct H3Monitor {
    pub initial: Option<f64>,
    pub sup: f64,
}

impl H3Monitor {
    pub fn ratio(&self) -> f64 {
        match self.initial {
            Some(i) if i > 0.0 => self.sup / i,
            _ => 0.0,
        }
    }
}

impl Observer for H3Monitor {
    fn observe(&mut self, state: &State) -> Result<()> {
        let h3 = state.sobolev_norm(3);
        if self.initial.is_none() {
            self.initial = Some(h3);
        }
        self.sup = self.sup.max(h3);
        Ok(())
    }
}

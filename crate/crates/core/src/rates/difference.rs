use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{fit_decay_exponent, DecaySeries, FitResult, WindowPolicy};
use crate::dynamics::{Observer, State, TimeSeries};
use crate::error::{Error, Result};
use crate::linear::{evolve_linear_on_grid, LinearState};
use crate::params::PhysParams;
use crate::spectral::{vector_seminorm, Snapshot, SpectralField, SpectralVectorField};

/// Differences whose largest sample stays below this are not fitted.
pub const DIFFERENCE_FIT_FLOOR: f64 = 1e-9;

const COLUMNS: [&str; 10] = [
    "b_l2",
    "b_lin_l2",
    "b_delta_l2",
    "grad_b_l2",
    "grad_b_delta_l2",
    "rho_l2",
    "rho_delta_l2",
    "rho_m_l2",
    "rho_m_lin_l2",
    "rho_m_delta_l2",
];

/// Observer recording nonlinear norms next to the norms of
/// `U - e^{tL} U_0` for the conservative triple `(rho, m, B)`.
pub struct DifferenceTracker {
    initial: LinearState,
    t0: f64,
    params: PhysParams,
    series: TimeSeries,
}

impl DifferenceTracker {
    pub fn new(initial: &State, params: &PhysParams) -> Self {
        let names = COLUMNS.iter().map(|s| s.to_string());
        Self {
            initial: initial.to_linear(),
            t0: initial.t,
            params: *params,
            series: TimeSeries::new(names),
        }
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_series(self) -> TimeSeries {
        self.series
    }
}

fn pair_norm(r: &SpectralField, m: &SpectralVectorField) -> f64 {
    (r.l2_norm_squared() + m.l2_norm_squared()).sqrt()
}

impl Observer for DifferenceTracker {
    fn observe(&mut self, state: &State) -> Result<()> {
        let lin = evolve_linear_on_grid(&self.initial, &self.params, state.t - self.t0)?;
        let now = state.to_linear();
        let db = &now.b - &lin.b;
        let dr = &now.varrho - &lin.varrho;
        let dm = &now.m - &lin.m;
        self.series.push(vec![
            state.t,
            now.b.l2_norm(),
            lin.b.l2_norm(),
            db.l2_norm(),
            vector_seminorm(&now.b, 1.0),
            vector_seminorm(&db, 1.0),
            now.varrho.l2_norm(),
            dr.l2_norm(),
            pair_norm(&now.varrho, &now.m),
            pair_norm(&lin.varrho, &lin.m),
            pair_norm(&dr, &dm),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencePair {
    pub label: String,
    pub full: Option<FitResult>,
    pub difference: Option<FitResult>,
    /// `alpha(difference) - alpha(full)`.
    pub gap: Option<f64>,
    pub max_difference: f64,
    /// `ok`, `below fit floor`, `degenerate` or `fit failed: ...`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    pub pairs: Vec<DifferencePair>,
}

impl DifferenceReport {
    pub fn pair(&self, label: &str) -> Option<&DifferencePair> {
        self.pairs.iter().find(|p| p.label == label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fit full and difference norms from a [`DifferenceTracker`] series.
pub fn difference_decay_report(series: &TimeSeries, policy: &WindowPolicy) -> Result<DifferenceReport> {
    let t = series.times();
    let col = |name: &str| {
        series
            .column(name)
            .ok_or_else(|| Error::InvalidArgument(format!("series lacks column {name}")))
    };
    let mut pairs = Vec::new();
    for (label, full_col, diff_col) in [
        ("B", "b_l2", "b_delta_l2"),
        ("grad_B", "grad_b_l2", "grad_b_delta_l2"),
        ("rho", "rho_l2", "rho_delta_l2"),
        ("rho_m", "rho_m_l2", "rho_m_delta_l2"),
    ] {
        let full_v = col(full_col)?;
        let diff_v = col(diff_col)?;
        let full = DecaySeries::from_samples(full_col, &t, &full_v).and_then(|s| fit_decay_exponent(&s, policy));
        let max_difference = diff_v.iter().copied().fold(0.0, f64::max);
        let (difference, status) = if max_difference == 0.0 {
            (None, "degenerate".to_string())
        } else if max_difference < DIFFERENCE_FIT_FLOOR {
            (None, "below fit floor".to_string())
        } else {
            match DecaySeries::from_samples(diff_col, &t, &diff_v).and_then(|s| fit_decay_exponent(&s, policy)) {
                Ok(f) => (Some(f), "ok".to_string()),
                Err(e) => (None, format!("fit failed: {e}")),
            }
        };
        let full = full.ok();
        let gap = match (&full, &difference) {
            (Some(a), Some(b)) => Some(b.alpha - a.alpha),
            _ => None,
        };
        pairs.push(DifferencePair {
            label: label.into(),
            full,
            difference,
            gap,
            max_difference,
            status,
        });
    }
    Ok(DifferenceReport { pairs })
}

const FIELD_NAMES: [&str; 7] = ["varrho", "u1", "u2", "u3", "b1", "b2", "b3"];

fn snapshot_path(dir: &Path, name: &str, index: usize) -> PathBuf {
    dir.join(format!("{name}_{index:05}.snap"))
}

/// Observer writing every observed state as seven physical-space snapshots.
pub struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
    seen: usize,
    written: usize,
}

impl SnapshotWriter {
    /// Keep one observation in `every` (the first is always kept).
    pub fn new(dir: impl Into<PathBuf>, every: usize) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            every: every.max(1),
            seen: 0,
            written: 0,
        })
    }

    pub fn written(&self) -> usize {
        self.written
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &State) -> Result<()> {
        let keep = self.seen % self.every == 0;
        self.seen += 1;
        if !keep {
            return Ok(());
        }
        let fields: [&SpectralField; 7] = [
            &state.varrho,
            state.u.component(0),
            state.u.component(1),
            state.u.component(2),
            state.b.component(0),
            state.b.component(1),
            state.b.component(2),
        ];
        for (name, f) in FIELD_NAMES.iter().zip(fields) {
            Snapshot::from_field(name, state.t, f).save(snapshot_path(&self.dir, name, self.written))?;
        }
        self.written += 1;
        Ok(())
    }
}

/// Rebuild the state stored under `index` by [`SnapshotWriter`].
pub fn load_state_snapshots(dir: impl AsRef<Path>, index: usize) -> Result<State> {
    let dir = dir.as_ref();
    let mut fields = Vec::with_capacity(7);
    let mut time = None;
    for name in FIELD_NAMES {
        let snap = Snapshot::load(snapshot_path(dir, name, index))?;
        match time {
            None => time = Some(snap.time),
            Some(t) if t != snap.time => {
                return Err(Error::Format(format!("snapshot {index}: {name} has time {} not {t}", snap.time)))
            }
            _ => {}
        }
        fields.push(snap.to_field()?);
    }
    let mut it = fields.into_iter();
    let mut next = || it.next().expect("seven fields");
    let varrho = next();
    let u = SpectralVectorField::new([next(), next(), next()])?;
    let b = SpectralVectorField::new([next(), next(), next()])?;
    State::new(varrho, u, b, time.unwrap_or(0.0))
}

/// Feed every stored snapshot, in index order, to a fresh [`DifferenceTracker`]
/// anchored at snapshot 0.
pub fn replay_snapshots(dir: impl AsRef<Path>, params: &PhysParams) -> Result<TimeSeries> {
    let dir = dir.as_ref();
    let first = load_state_snapshots(dir, 0)?;
    let mut tracker = DifferenceTracker::new(&first, params);
    tracker.observe(&first)?;
    let mut index = 1;
    while snapshot_path(dir, FIELD_NAMES[0], index).exists() {
        tracker.observe(&load_state_snapshots(dir, index)?)?;
        index += 1;
    }
    Ok(tracker.into_series())
}

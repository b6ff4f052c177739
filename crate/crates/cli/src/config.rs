//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use decaylab_core::experiments::{LinearRatesConfig, NonlinearRunConfig};
use decaylab_core::initdata::{DataKind, SpectralCondition};
use decaylab_core::linear::RadialProfile;
use decaylab_core::{GridSpec, PhysParams};
use serde::{Deserialize, Serialize};

pub const PRESETS: [(&str, &str); 8] = [
    ("linear-rates", "whole-space linear norms by radial quadrature, k = 0..3"),
    ("nonlinear-decay", "grid run: ||B||, ||grad B||, ||rho|| rates"),
    ("time-derivative-rates", "||d_t B||, ||d_t rho||, ||div u|| rates on a u0 = 0 run"),
    ("weighted-decay", "weighted magnetic norms and their windowed brackets"),
    ("difference-rates", "nonlinear minus linear solution, exponent gaps"),
    ("property-suite", "exact identities, conservation and reductions"),
    ("make-initdata", "build and verify low-frequency initial data"),
    ("ode-lemma", "comparison ODE plateau of F / t^gamma1"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub initdata: InitSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub linear: LinearSection,
    #[serde(default)]
    pub ode: OdeSection,
    #[serde(default)]
    pub property: PropertySection,
}

fn default_seed() -> u64 {
    20240607
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub box_length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 64,
            box_length: 32.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub mu: f64,
    pub nu: f64,
    pub pressure_gamma: f64,
    pub hall: bool,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        let p = PhysParams::default();
        Self {
            mu: p.mu,
            nu: p.nu,
            pressure_gamma: p.pressure_gamma,
            hall: p.hall_enabled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub kind: String,
    pub amplitude: f64,
    pub sigma: f64,
    pub cutoff_modes: u32,
    /// Floor as a fraction of the envelope peak.
    pub c0_relative: f64,
    pub eta: f64,
    pub zero_magnetic: bool,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            kind: DataKind::Localized.name().into(),
            amplitude: 1e-2,
            sigma: 2.5,
            cutoff_modes: 2,
            c0_relative: 0.3,
            eta: 0.0,
            zero_magnetic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: 0.25,
            t_end: 200.0,
            record_every: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub t_min: f64,
    pub t_max: f64,
    pub beta: f64,
    pub weighted_gammas: Vec<f64>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            t_min: 10.0,
            t_max: 200.0,
            beta: 0.02,
            weighted_gammas: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSection {
    /// `lower-bound` (smooth bump) or `indicator`.
    pub profile: String,
    pub c0: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub magnetic_tolerance: f64,
    pub fluid_tolerance: f64,
    pub eta_shift: f64,
}

impl Default for LinearSection {
    fn default() -> Self {
        let d = LinearRatesConfig::default();
        Self {
            profile: "lower-bound".into(),
            c0: 1.0,
            t_min: d.t_min,
            t_max: d.t_max,
            samples: d.samples,
            magnetic_tolerance: d.magnetic_tolerance,
            fluid_tolerance: d.fluid_tolerance,
            eta_shift: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSection {
    pub gamma: f64,
    pub t_end: f64,
}

impl Default for OdeSection {
    fn default() -> Self {
        Self { gamma: 2.0, t_end: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropertySection {
    pub n: usize,
}

impl Default for PropertySection {
    fn default() -> Self {
        Self { n: 32 }
    }
}

/// One violated invariant, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse { line: usize, column: usize, message: String },
    Invalid(Vec<ConfigIssue>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse { line, column, message } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            ConfigError::Invalid(issues) => {
                writeln!(f, "{} invalid setting(s):", issues.len())?;
                for i in issues {
                    writeln!(f, "  {i}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str::<ExperimentConfig>(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn is_grid_preset(p: &str) -> bool {
    matches!(
        p,
        "nonlinear-decay" | "time-derivative-rates" | "weighted-decay" | "difference-rates" | "make-initdata"
    )
}

impl ExperimentConfig {
    /// Every violated invariant, plus warnings that do not block a run.
    pub fn check(&self) -> (Vec<ConfigIssue>, Vec<String>) {
        let mut issues = Vec::new();
        let mut warnings = Vec::new();
        let mut bad = |path: &str, message: String| {
            issues.push(ConfigIssue {
                path: path.into(),
                message,
            })
        };
        if !PRESETS.iter().any(|(n, _)| *n == self.preset) {
            bad("preset", format!("unknown preset {:?}; see list-presets", self.preset));
        }
        let grid = GridSpec::new(self.grid.n, self.grid.box_length);
        if let Err(e) = &grid {
            bad("grid", e.to_string());
        }
        let p = &self.physics;
        if !(p.mu > 0.0) {
            bad("physics.mu", format!("viscosity condition mu > 0 violated (mu = {})", p.mu));
        }
        if !(2.0 * p.mu + 3.0 * p.nu >= 0.0) {
            bad(
                "physics.nu",
                format!(
                    "viscosity condition 2 mu + 3 nu >= 0 violated (2 mu + 3 nu = {})",
                    2.0 * p.mu + 3.0 * p.nu
                ),
            );
        }
        if !(p.pressure_gamma >= 1.0) {
            bad(
                "physics.pressure_gamma",
                format!("pressure law P = rho^gamma / gamma needs gamma >= 1, got {}", p.pressure_gamma),
            );
        }
        let d = &self.initdata;
        if DataKind::parse(&d.kind).is_none() {
            bad(
                "initdata.kind",
                format!("unknown kind {:?} (lower-bound, generic-eta, zero-velocity-L1-small, localized)", d.kind),
            );
        }
        if !(d.amplitude > 0.0) {
            bad("initdata.amplitude", format!("must be positive, got {}", d.amplitude));
        }
        if !(d.sigma > 0.0) {
            bad("initdata.sigma", format!("must be positive, got {}", d.sigma));
        }
        if !(d.eta >= 0.0) {
            bad("initdata.eta", format!("envelope exponent must be >= 0, got {}", d.eta));
        }
        if !(d.c0_relative > 0.0 && d.c0_relative <= 1.0) {
            bad("initdata.c0_relative", format!("floor fraction must lie in (0, 1], got {}", d.c0_relative));
        }
        if d.cutoff_modes < 1 {
            bad("initdata.cutoff_modes", "must be at least 1".into());
        } else if 3 * d.cutoff_modes as usize >= self.grid.n {
            bad(
                "initdata.cutoff_modes",
                format!(
                    "k_c = {} conflicts with dealiasing: need 3 k_c < n = {}",
                    d.cutoff_modes, self.grid.n
                ),
            );
        }
        let e = &self.evolution;
        if !(e.dt > 0.0) {
            bad("evolution.dt", format!("must be positive, got {}", e.dt));
        }
        if !(e.t_end > 0.0) {
            bad("evolution.t_end", format!("must be positive, got {}", e.t_end));
        }
        if e.record_every < 1 {
            bad("evolution.record_every", "must be at least 1".into());
        }
        let f = &self.fit;
        if !(f.t_min > 0.0 && f.t_max > f.t_min) {
            bad("fit", format!("need 0 < t_min < t_max, got [{}, {}]", f.t_min, f.t_max));
        }
        if !(f.beta > 0.0) {
            bad("fit.beta", format!("must be positive, got {}", f.beta));
        }
        if let Some(g) = f.weighted_gammas.iter().find(|g| !(**g >= 0.0)) {
            bad("fit.weighted_gammas", format!("weight exponents must be >= 0, got {g}"));
        }
        if f.weighted_gammas.iter().any(|g| *g > 3.0) {
            warnings.push("fit.weighted_gammas: exponents above 3 are outside the tested range".into());
        }
        let l = &self.linear;
        if !matches!(l.profile.as_str(), "lower-bound" | "indicator") {
            bad("linear.profile", format!("unknown profile {:?} (lower-bound, indicator)", l.profile));
        }
        if !(l.c0 > 0.0) {
            bad("linear.c0", format!("must be positive, got {}", l.c0));
        }
        if !(l.t_min > 0.0 && l.t_max > l.t_min) {
            bad("linear", format!("need 0 < t_min < t_max, got [{}, {}]", l.t_min, l.t_max));
        }
        if l.samples < 8 {
            bad("linear.samples", format!("need at least 8 samples, got {}", l.samples));
        }
        if !(self.ode.gamma > 0.5) {
            bad("ode.gamma", format!("weight exponent must exceed 1/2, got {}", self.ode.gamma));
        }
        if !(self.ode.t_end > 1.0) {
            bad("ode.t_end", format!("must exceed 1, got {}", self.ode.t_end));
        }
        if let Err(e) = GridSpec::new(self.property.n, 1.0) {
            bad("property.n", e.to_string());
        }
        if is_grid_preset(&self.preset) && issues.is_empty() {
            let cap = f.beta * self.grid.box_length.powi(2);
            if e.t_end > cap {
                warnings.push(format!(
                    "evolution.t_end = {} exceeds the validity window beta L^2 = {cap:.1}; late samples are not fitted",
                    e.t_end
                ));
            }
            if let (Ok(g), Some(_)) = (&grid, DataKind::parse(&d.kind)) {
                let c = self.condition(*g);
                if let Err(err) = c.validate(*g) {
                    issues.push(ConfigIssue {
                        path: "initdata".into(),
                        message: err.to_string(),
                    });
                }
            }
        }
        (issues, warnings)
    }

    pub fn params(&self) -> PhysParams {
        PhysParams {
            mu: self.physics.mu,
            nu: self.physics.nu,
            pressure_gamma: self.physics.pressure_gamma,
            hall_enabled: self.physics.hall,
        }
    }

    pub fn condition(&self, grid: GridSpec) -> SpectralCondition {
        let mut c = SpectralCondition {
            c0: 0.0,
            cutoff_modes: self.initdata.cutoff_modes,
            eta: self.initdata.eta,
            amplitude: self.initdata.amplitude,
            sigma: self.initdata.sigma,
            seed: self.seed,
        };
        c.c0 = self.initdata.c0_relative * c.envelope_scale(grid);
        c
    }

    pub fn kind(&self) -> DataKind {
        DataKind::parse(&self.initdata.kind).unwrap_or(DataKind::Localized)
    }

    pub fn nonlinear(&self) -> NonlinearRunConfig {
        let grid = GridSpec::new(self.grid.n, self.grid.box_length).expect("validated grid");
        NonlinearRunConfig {
            n: self.grid.n,
            box_length: self.grid.box_length,
            params: self.params(),
            condition: self.condition(grid),
            kind: self.kind(),
            zero_magnetic: self.initdata.zero_magnetic,
            dt: self.evolution.dt,
            t_end: self.evolution.t_end,
            record_every: self.evolution.record_every,
            fit_t_min: self.fit.t_min,
            fit_t_max: self.fit.t_max,
            validity_beta: self.fit.beta,
            weighted_gammas: self.fit.weighted_gammas.clone(),
            snapshot_dir: None,
            snapshot_every: 1,
        }
    }

    pub fn linear_rates(&self) -> LinearRatesConfig {
        let profile = match self.linear.profile.as_str() {
            "indicator" => RadialProfile::indicator(self.linear.c0),
            _ => RadialProfile::lower_bound_default(self.linear.c0),
        };
        LinearRatesConfig {
            profile,
            params: self.params(),
            t_min: self.linear.t_min,
            t_max: self.linear.t_max,
            samples: self.linear.samples,
            magnetic_tolerance: self.linear.magnetic_tolerance,
            fluid_tolerance: self.linear.fluid_tolerance,
            ..LinearRatesConfig::default()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}

/// Read, parse and check a config file; the output directory is resolved
/// against the file's directory.
pub fn validate_config(path: &Path) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    let (issues, warnings) = cfg.check();
    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    if cfg.output.is_relative() {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.output = base.join(&cfg.output);
    }
    Ok((cfg, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        parse_config(text).unwrap().check().0
    }

    #[test]
    fn defaults_are_valid() {
        assert!(issues("preset = \"nonlinear-decay\"").is_empty());
    }

    #[test]
    fn viscosity_conditions() {
        let i = issues("preset = \"linear-rates\"\n[physics]\nmu = -1.0\n");
        assert_eq!(i[0].path, "physics.mu");
        assert!(i[0].message.contains("mu > 0"));
        let i = issues("preset = \"linear-rates\"\n[physics]\nmu = 1.0\nnu = -1.0\n");
        assert_eq!(i.len(), 1);
        assert!(i[0].message.contains("2 mu + 3 nu >= 0"));
        assert!(issues("preset = \"linear-rates\"\n[physics]\nmu = 1.0\nnu = -0.5\n").is_empty());
    }

    #[test]
    fn cutoff_conflicts_with_dealiasing() {
        let i = issues("preset = \"nonlinear-decay\"\n[grid]\nn = 16\n[initdata]\ncutoff_modes = 6\n");
        assert!(i.iter().any(|i| i.path == "initdata.cutoff_modes" && i.message.contains("dealiasing")));
    }

    #[test]
    fn parse_errors_are_located() {
        match parse_config("preset = \"ode-lemma\"\n[physics]\nmu = = 2\n") {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column >= 5);
            }
            other => panic!("{other:?}"),
        }
        match parse_config("preset = \"ode-lemma\"\n[physics]\nviscosity = 2\n") {
            Err(ConfigError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("viscosity"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normalized_round_trip() {
        let cfg = parse_config("preset = \"weighted-decay\"\nseed = 3\n").unwrap();
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}

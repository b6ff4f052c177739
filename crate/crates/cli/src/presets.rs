//! Preset runners. Each writes its artifacts into the output directory and
//! reports which contracts failed.

use std::path::PathBuf;
use std::time::Instant;

use decaylab_core::dynamics::{Observer, TimeSeries};
use decaylab_core::experiments::{
    eta_shift, linear_rates, navier_stokes_reduction, nonlinear_initial_state, nonlinear_run, ode_lemma,
    property_suite, reductions_suite, BracketRow, LinearRatesConfig, NonlinearOutcome, PropertyCheck,
};
use decaylab_core::initdata::{make_low_frequency_data, verify_conditions};
use decaylab_core::rates::{replay_snapshots, DecayReportRow, SnapshotWriter};
use decaylab_core::GridSpec;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub strict: bool,
    pub snapshot_every: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub preset: String,
    pub artifacts: Vec<String>,
    pub hard_failures: Vec<String>,
    pub rate_failures: Vec<String>,
    pub failure: Option<String>,
    pub exit_code: i32,
}

struct Out {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Out {
    fn write(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).expect("json values serialize");
        self.write(name, &(text + "\n"))
    }
}

#[derive(Default)]
struct Verdicts {
    hard: Vec<String>,
    rates: Vec<String>,
    failure: Option<String>,
}

impl Verdicts {
    fn checks(&mut self, checks: &[PropertyCheck]) {
        self.hard.extend(checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
    }

    fn rows(&mut self, rows: &[DecayReportRow]) {
        self.rates.extend(rows.iter().filter(|r| !r.passed()).map(|r| r.label.clone()));
    }

    fn brackets(&mut self, rows: &[BracketRow]) {
        self.rates
            .extend(rows.iter().filter(|r| !r.passed()).map(|r| format!("{}_bracket", r.label)));
    }
}

type Outcome = std::result::Result<(), Box<dyn std::error::Error>>;

fn rows_json(rows: &[DecayReportRow]) -> Value {
    serde_json::to_value(rows).expect("rows serialize")
}

fn run_linear(cfg: &ExperimentConfig, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let lin = linear_rates(&cfg.linear_rates())?;
    let shift = eta_shift(
        cfg.linear.eta_shift,
        1.0,
        &cfg.params(),
        cfg.linear.t_min,
        cfg.linear.t_max,
        0.1,
    )?;
    let mut rows = lin.rows.clone();
    rows.push(shift);
    out.write("linear_series.csv", &lin.series.to_csv())?;
    out.json(
        "report.json",
        &json!({ "rows": rows_json(&rows), "brackets": serde_json::to_value(&lin.brackets)? }),
    )?;
    v.rows(&rows);
    v.brackets(&lin.brackets);
    Ok(())
}

fn nonlinear(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Out, v: &mut Verdicts) -> Result<NonlinearOutcome, Box<dyn std::error::Error>> {
    let mut run = cfg.nonlinear();
    if let Some(every) = opts.snapshot_every {
        run.snapshot_dir = Some(out.dir.join("snapshots"));
        run.snapshot_every = every;
    }
    let o = nonlinear_run(&run)?;
    out.write("series.csv", &o.series.to_csv())?;
    out.write("initial_conditions.json", &o.condition_report)?;
    if let Some(f) = &o.failure {
        v.failure = Some(f.clone());
        v.hard.push("solver".into());
    }
    Ok(o)
}

fn run_nonlinear_decay(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let o = nonlinear(cfg, opts, out, v)?;
    let rows = o.decay_rows();
    let mut checks = Vec::new();
    if cfg.initdata.zero_magnetic {
        let s0 = nonlinear_initial_state(&o.config)?;
        checks.push(navier_stokes_reduction(&s0, &o.config.params, o.config.dt, 100)?);
    }
    out.json(
        "report.json",
        &json!({
            "rows": rows_json(&rows),
            "checks": serde_json::to_value(&checks)?,
            "h3_ratio": o.h3_ratio,
            "runtime_seconds": o.runtime_seconds,
        }),
    )?;
    v.rows(&rows);
    v.checks(&checks);
    Ok(())
}

fn run_time_derivative(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let o = nonlinear(cfg, opts, out, v)?;
    let mut rows = o.time_derivative_rows();
    let lin = linear_rates(&LinearRatesConfig {
        magnetic_orders: vec![],
        fluid_orders: vec![],
        ..cfg.linear_rates()
    })?;
    rows.extend(lin.rows);
    out.json("report.json", &json!({ "rows": rows_json(&rows), "h3_ratio": o.h3_ratio }))?;
    v.rows(&rows);
    Ok(())
}

fn run_weighted(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let o = nonlinear(cfg, opts, out, v)?;
    let rows = o.weighted_rows();
    let brackets = o.weighted_brackets();
    out.json(
        "report.json",
        &json!({ "rows": rows_json(&rows), "brackets": serde_json::to_value(&brackets)? }),
    )?;
    v.rows(&rows);
    v.brackets(&brackets);
    Ok(())
}

fn run_difference(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let o = nonlinear(cfg, opts, out, v)?;
    let rows = o.difference_rows();
    out.json(
        "report.json",
        &json!({ "rows": rows_json(&rows), "pairs": serde_json::to_value(&o.difference)? }),
    )?;
    if opts.snapshot_every.is_some() {
        let replay = replay_snapshots(out.dir.join("snapshots"), &o.config.params)?;
        out.write("difference_replay.csv", &replay.to_csv())?;
    }
    v.rows(&rows);
    Ok(())
}

fn run_properties(cfg: &ExperimentConfig, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let mut checks = property_suite(cfg.property.n, cfg.seed)?;
    checks.extend(reductions_suite(cfg.property.n, cfg.seed)?);
    out.json("report.json", &json!({ "checks": serde_json::to_value(&checks)? }))?;
    v.checks(&checks);
    Ok(())
}

fn run_initdata(cfg: &ExperimentConfig, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let grid = GridSpec::new(cfg.grid.n, cfg.grid.box_length)?;
    let cond = cfg.condition(grid);
    let state = make_low_frequency_data(grid, &cond, cfg.kind())?;
    let report = verify_conditions(&state, &cond);
    let mut writer = SnapshotWriter::new(out.dir.join("initdata"), 1)?;
    writer.observe(&state)?;
    out.artifacts.push("initdata/".into());
    out.write("report.json", &report.to_json()?)?;
    v.hard
        .extend(report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
    Ok(())
}

fn run_ode(cfg: &ExperimentConfig, out: &mut Out, v: &mut Verdicts) -> Outcome {
    let r = ode_lemma(cfg.ode.gamma, cfg.ode.t_end)?;
    let mut series = TimeSeries::new(["F".to_string(), "ratio".to_string()]);
    for p in &r.samples {
        series.push(vec![p[0], p[1], p[1] / p[0].powf(r.gamma1)])?;
    }
    out.write("ode.csv", &series.to_csv())?;
    let mut summary = serde_json::to_value(&r)?;
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("samples");
    }
    out.json("report.json", &summary)?;
    if !r.plateau {
        v.hard.push("ode_plateau".into());
    }
    Ok(())
}

/// Run a validated configuration. Property failures are always hard; rate
/// failures only under `strict`.
pub fn run_preset(cfg: &ExperimentConfig, opts: &RunOptions) -> std::io::Result<RunSummary> {
    let start = Instant::now();
    std::fs::create_dir_all(&cfg.output)?;
    let mut out = Out {
        dir: cfg.output.clone(),
        artifacts: Vec::new(),
    };
    let mut v = Verdicts::default();
    let result = match cfg.preset.as_str() {
        "linear-rates" => run_linear(cfg, &mut out, &mut v),
        "nonlinear-decay" => run_nonlinear_decay(cfg, opts, &mut out, &mut v),
        "time-derivative-rates" => run_time_derivative(cfg, opts, &mut out, &mut v),
        "weighted-decay" => run_weighted(cfg, opts, &mut out, &mut v),
        "difference-rates" => run_difference(cfg, opts, &mut out, &mut v),
        "property-suite" => run_properties(cfg, &mut out, &mut v),
        "make-initdata" => run_initdata(cfg, &mut out, &mut v),
        "ode-lemma" => run_ode(cfg, &mut out, &mut v),
        other => Err(format!("unknown preset {other}").into()),
    };
    if let Err(e) = result {
        v.failure = Some(e.to_string());
    }
    let exit_code = if v.failure.is_some() || !v.hard.is_empty() || (opts.strict && !v.rates.is_empty()) {
        1
    } else {
        0
    };
    let summary = RunSummary {
        preset: cfg.preset.clone(),
        artifacts: out.artifacts.clone(),
        hard_failures: v.hard,
        rate_failures: v.rates,
        failure: v.failure,
        exit_code,
    };
    let manifest = json!({
        "preset": cfg.preset,
        "seed": cfg.seed,
        "strict": opts.strict,
        "snapshot_every": opts.snapshot_every,
        "config": cfg,
        "warnings": opts.warnings,
        "artifacts": summary.artifacts,
        "hard_failures": summary.hard_failures,
        "rate_failures": summary.rate_failures,
        "failure": summary.failure,
        "exit_status": exit_code,
        "runtime_seconds": start.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    out.json("manifest.json", &manifest)?;
    Ok(summary)
}

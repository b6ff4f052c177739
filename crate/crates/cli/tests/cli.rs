use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decaylab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).args(extra).output().unwrap()
}

fn validate(config: &Path) -> Output {
    bin().arg("validate").arg("--config").arg(config).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const SMALL_GRID: &str = r#"
[grid]
n = 16
box_length = 25.132741228718345

[initdata]
c0_relative = 0.1

[evolution]
dt = 0.25
t_end = 5.0
record_every = 2

[fit]
t_min = 0.5
t_max = 5.0
"#;

#[test]
fn list_presets_names_every_preset() {
    let o = bin().arg("list-presets").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "linear-rates",
        "nonlinear-decay",
        "time-derivative-rates",
        "weighted-decay",
        "difference-rates",
        "property-suite",
        "make-initdata",
        "ode-lemma",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn negative_shear_viscosity_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"linear-rates\"\n[physics]\nmu = -1.0\n");
    let o = validate(&c);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mu > 0"), "{}", stderr(&o));
    assert_eq!(run(&c, &[]).status.code(), Some(2));
}

#[test]
fn bulk_viscosity_condition_boundary() {
    let d = tempfile::tempdir().unwrap();
    let ok = write_config(d.path(), "a.toml", "preset = \"linear-rates\"\n[physics]\nmu = 1.0\nnu = -0.5\n");
    assert!(validate(&ok).status.success(), "{}", stderr(&validate(&ok)));
    let bad = write_config(d.path(), "b.toml", "preset = \"linear-rates\"\n[physics]\nmu = 1.0\nnu = -1.0\n");
    let o = validate(&bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("2 mu + 3 nu"), "{}", stderr(&o));
}

#[test]
fn cutoff_must_respect_dealiasing() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(
        d.path(),
        "c.toml",
        "preset = \"make-initdata\"\n[grid]\nn = 16\n[initdata]\ncutoff_modes = 6\n",
    );
    let o = validate(&c);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dealiasing"), "{}", stderr(&o));
}

#[test]
fn parse_errors_report_line_and_column() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"ode-lemma\"\n[ode]\ngamma = = 2\n");
    let o = validate(&c);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let c = write_config(d.path(), "u.toml", "preset = \"ode-lemma\"\n[ode]\ngama = 2\n");
    let o = validate(&c);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn validate_prints_normalized_config() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"ode-lemma\"\n");
    let o = validate(&c);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let back = decaylab_cli::parse_config(&text).unwrap();
    assert_eq!(back.preset, "ode-lemma");
    assert_eq!(back.seed, 20240607);
}

#[test]
fn linear_rates_magnetic_row() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"linear-rates\"\n");
    let o = run(&c, &["--strict"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(d.path().join("out/report.json"));
    let rows = report["rows"].as_array().unwrap();
    let row = rows.iter().find(|r| r["label"] == "grad0_B_lin").unwrap();
    let alpha = row["alpha"].as_f64().unwrap();
    assert!((alpha - 0.75).abs() <= 0.03, "{alpha}");
    for key in ["C", "r2", "window", "theory_alpha", "tolerance", "verdict"] {
        assert!(row.get(key).is_some(), "{key}");
    }
    assert!(rows.iter().any(|r| r["label"] == "B_lin_eta1"));
    let csv = std::fs::read_to_string(d.path().join("out/linear_series.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("t,"));
    let manifest = read_json(d.path().join("out/manifest.json"));
    assert_eq!(manifest["exit_status"], 0);
    assert_eq!(manifest["preset"], "linear-rates");
}

#[test]
fn strict_turns_rate_failures_into_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let body = "preset = \"linear-rates\"\n[linear]\nmagnetic_tolerance = 1e-9\n";
    let c = write_config(d.path(), "c.toml", body);
    let lenient = run(&c, &[]);
    assert_eq!(lenient.status.code(), Some(0), "{}", stderr(&lenient));
    assert!(stderr(&lenient).contains("warn grad0_B_lin"));
    let strict = run(&c, &["--strict"]);
    assert_eq!(strict.status.code(), Some(1));
    let manifest = read_json(d.path().join("out/manifest.json"));
    assert!(manifest["rate_failures"].as_array().unwrap().len() >= 1);
}

#[test]
fn ode_lemma_plateaus() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"ode-lemma\"\n");
    let o = run(&c, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(d.path().join("out/report.json"));
    assert_eq!(r["plateau"], true);
    assert!(d.path().join("out/ode.csv").exists());
}

#[test]
fn make_initdata_writes_snapshots_and_report() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("preset = \"make-initdata\"\n{SMALL_GRID}");
    let c = write_config(d.path(), "c.toml", &body);
    let o = run(&c, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["varrho", "u1", "u2", "u3", "b1", "b2", "b3"] {
        assert!(d.path().join(format!("out/initdata/{name}_00000.snap")).exists(), "{name}");
    }
    let r = read_json(d.path().join("out/report.json"));
    assert_eq!(r["passed"], true);
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("preset = \"nonlinear-decay\"\n{SMALL_GRID}");
    let c = write_config(d.path(), "c.toml", &body);
    assert!(run(&c, &["--out", d.path().join("a").to_str().unwrap()]).status.success());
    assert!(run(&c, &["--out", d.path().join("b").to_str().unwrap()]).status.success());
    let a = std::fs::read_to_string(d.path().join("a/series.csv")).unwrap();
    let b = std::fs::read_to_string(d.path().join("b/series.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.lines().count() > 2);
}

#[test]
fn zero_magnetic_run_checks_navier_stokes_reduction() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("preset = \"nonlinear-decay\"\n{}", SMALL_GRID.replace("c0_relative = 0.1", "c0_relative = 0.1\nzero_magnetic = true"));
    let c = write_config(d.path(), "c.toml", &body);
    let o = run(&c, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(d.path().join("out/report.json"));
    let check = &r["checks"][0];
    assert_eq!(check["name"], "navier_stokes_reduction");
    assert_eq!(check["passed"], true);
}

#[test]
fn difference_rates_with_snapshot_replay() {
    let d = tempfile::tempdir().unwrap();
    let body = format!("preset = \"difference-rates\"\n{SMALL_GRID}");
    let c = write_config(d.path(), "c.toml", &body);
    let o = run(&c, &["--snapshot-every", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(d.path().join("out/report.json"));
    assert_eq!(r["pairs"]["pairs"].as_array().map(|p| p.len()).unwrap_or(0), 4);
    let replay = std::fs::read_to_string(d.path().join("out/difference_replay.csv")).unwrap();
    assert!(replay.lines().next().unwrap().contains("b_delta_l2"));
}

#[test]
fn property_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", "preset = \"property-suite\"\n[property]\nn = 16\n");
    let o = run(&c, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(d.path().join("out/report.json"));
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

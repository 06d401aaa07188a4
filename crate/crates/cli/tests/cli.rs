use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ks_cli::config::{BlowupConfig, ExperimentConfig, SweepSpec};
use ks_core::bounds::{compute_constants, InitialNorms};
use ks_core::monitor::CSV_COLUMNS;
use ks_core::output::json_f64;
use serde_json::Value;

fn ksbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksbound")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

const SMALL_RUN: &str = r#"
seed = 7
tau = 0.5

[domain]
lx = 1.0
ly = 1.0
nx = 24
ny = 24

[model]
chi = 5.0
mu = 1.0
r = 1.0

[solver]
t_end = 1.5

[u0]
kind = "gaussian"
center = [0.5, 0.5]
width = 0.1
mass = 2.0

[c_gn]
source = "estimate"
samples = 50
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn bounds_reference_case() {
    let args = [
        "bounds", "--chi", "1", "--mu", "1", "--r", "1", "--omega", "1", "--u0-l1", "2", "--gradv0-l2-sq", "0",
        "--c-gn", "1",
    ];
    let o = ksbound(&args);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert!((json_f64(&j["E"]).unwrap() - 1408.1048482046).abs() < 1e-8);
    assert_eq!(json_f64(&j["k1"]), Some(3.0));
    assert_eq!(json_f64(&j["k2"]), Some(8.5));
    for key in ["k1", "k2", "k3", "k4", "k5", "k6", "k7", "epsilon", "c_gn", "tau", "E", "M", "K", "N", "L", "l2_rhs"] {
        assert!(j.get(key).is_some(), "missing {key}");
    }
    assert_eq!(ksbound(&args).stdout, o.stdout, "output must be byte-identical");
}

#[test]
fn bounds_overflow_and_invalid() {
    let o = ksbound(&["bounds", "--chi", "50", "--mu", "0.01", "--u0-l1", "2"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert_eq!(j["E"], "inf");
    assert_eq!(j["vacuous"], true);
    assert!(json_f64(&j["ln_E"]).unwrap().is_finite());

    let o = ksbound(&["bounds", "--mu", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));
}

#[test]
fn gn_estimate_command() {
    let o = ksbound(&["gn-estimate", "--nx", "32", "--ny", "32", "--samples", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_f64(&json(&o)["estimate"]), Some(1.0));
    let args = ["gn-estimate", "--nx", "32", "--ny", "32", "--samples", "40", "--seed", "3"];
    let a = ksbound(&args);
    assert_eq!(a.stdout, ksbound(&args).stdout);
    let j = json(&a);
    assert_eq!(json_f64(&j["recommended"]), json_f64(&j["estimate"]).map(|e| 2.0 * e));
    assert_eq!(code(&ksbound(&["gn-estimate", "--samples", "0"])), 2);
}

#[test]
fn run_writes_outputs_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", SMALL_RUN);
    let out = tmp.path().join("out");
    let o = ksbound(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert!(csv.lines().count() > 2);
    let checks: Value = serde_json::from_str(&fs::read_to_string(out.join("checks.json")).unwrap()).unwrap();
    assert_eq!(checks["all_passed"], true);
    assert_eq!(checks["status"]["name"], "completed");
    assert_eq!(checks["checks"].as_array().unwrap().len(), 8);
    let snap = fs::read_to_string(out.join("snapshot_u.txt")).unwrap();
    assert_eq!(snap.lines().count(), 1 + 24);
    assert!(out.join("snapshot_v.txt").exists());
}

#[test]
fn run_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let no_damping = write_config(tmp.path(), "a.toml", &SMALL_RUN.replace("mu = 1.0", "mu = 0.0"));
    let o = ksbound(&["run", "--config", &no_damping]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));
    let zero_time = write_config(tmp.path(), "b.toml", &SMALL_RUN.replace("t_end = 1.5", "t_end = 0.0"));
    assert_eq!(code(&ksbound(&["run", "--config", &zero_time])), 2);
    assert_eq!(code(&ksbound(&["run", "--config", "/nonexistent/run.toml"])), 2);
}

#[test]
fn exit_codes() {
    use ks_cli::{exit_code, CliError};
    assert_eq!(exit_code(&Ok(true)), 0);
    // a completed run with a failing check
    assert_eq!(exit_code(&Ok(false)), 1);
    assert_eq!(exit_code(&Err(CliError::Config("x".into()))), 2);
}

#[test]
fn run_stopped_early_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_RUN.replace("t_end = 1.5", "t_end = 1.5\nblowup_threshold = 10.0");
    let cfg = write_config(tmp.path(), "run.toml", &text);
    let out = tmp.path().join("out");
    let o = ksbound(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(out.join("trajectory.csv").exists());
}

fn sweep_text() -> String {
    let base = SMALL_RUN
        .replace("nx = 24", "nx = 16")
        .replace("ny = 24", "ny = 16")
        .replace("\n[", "\n[base.")
        .replacen("seed = 7", "[base]\nseed = 7", 1);
    format!("chis = [1.0, 5.0, 10.0]\nmus = [0.5, 1.0, 2.0]\n{base}")
}

#[test]
fn sweep_summary_matches_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let text = sweep_text();
    let cfg = write_config(tmp.path(), "sweep.toml", &text);
    let out = tmp.path().join("sweep");
    let o = ksbound(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();

    let spec = SweepSpec::from_toml(&text).unwrap();
    let base = &spec.base;
    let d = base.domain.build().unwrap();
    let (u0, v0) = base.initial().unwrap();
    let c_gn = base.c_gn.resolve(&d, base.seed).unwrap();
    for row in &rows {
        let chi: f64 = row[col("chi")].parse().unwrap();
        let mu: f64 = row[col("mu")].parse().unwrap();
        let mut cell = base.clone();
        cell.model.chi = chi;
        cell.model.mu = mu;
        let c = compute_constants(&cell.params().unwrap(), &InitialNorms::from_fields(&u0, &v0), c_gn, base.tau).unwrap();
        let l: f64 = row[col("L")].parse().unwrap_or(f64::INFINITY);
        let n: f64 = row[col("N")].parse().unwrap_or(f64::INFINITY);
        assert_eq!(l, c.paper.l);
        assert_eq!(n, c.paper.n);
        assert_eq!(row[col("status")], "completed");
        assert!(fs::read_dir(&out).unwrap().count() >= 11);
    }
    let digest: Value = serde_json::from_str(&fs::read_to_string(out.join("digest.json")).unwrap()).unwrap();
    assert_eq!(digest["cells"], 9);
    assert!(json_f64(&digest["log10_u_ratio"]["spread"]).unwrap().is_finite());
}

#[test]
fn sweep_rejects_nonpositive_mu() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &sweep_text().replace("mus = [0.5, 1.0, 2.0]", "mus = [0.0, 1.0]"));
    assert_eq!(code(&ksbound(&["sweep", "--config", &cfg])), 2);
}

const SMALL_BLOWUP: &str = r#"
chi = 1.0
mass_sub = 1.0
mass_super = 2.0
center = [0.5, 0.5]
width = 0.1

[domain]
lx = 1.0
ly = 1.0
nx = 16
ny = 16

[solver]
t_end = 0.2
"#;

fn blowup_json(cfg_text: &str) -> Value {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.toml", cfg_text);
    let out = tmp.path().join("b");
    let o = ksbound(&["blowup", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sub/trajectory.csv").exists() && out.join("super/trajectory.csv").exists());
    serde_json::from_str(&fs::read_to_string(out.join("blowup.json")).unwrap()).unwrap()
}

#[test]
fn blowup_both_subcritical_neither_triggers() {
    let j = blowup_json(SMALL_BLOWUP);
    for run in j["runs"].as_array().unwrap() {
        assert_eq!(run["blowup_detected"], false);
        assert_eq!(run["below_critical"], true);
        assert_eq!(run["status"]["name"], "completed");
    }
}

#[test]
fn blowup_threshold_below_initial_peak() {
    let j = blowup_json(&SMALL_BLOWUP.replace("t_end = 0.2", "t_end = 0.2\nblowup_threshold = 1.0"));
    for run in j["runs"].as_array().unwrap() {
        assert_eq!(run["blowup_detected"], true);
        assert_eq!(json_f64(&run["status"]["time"]), Some(0.0));
    }
}

#[test]
fn blowup_rejects_misordered_masses() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.toml", &SMALL_BLOWUP.replace("mass_super = 2.0", "mass_super = 0.5"));
    assert_eq!(code(&ksbound(&["blowup", "--config", &cfg])), 2);
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let run = ExperimentConfig::from_toml(&fs::read_to_string(root.join("canonical.toml")).unwrap()).unwrap();
    assert_eq!(run, ExperimentConfig::from_toml(&run.to_toml()).unwrap());
    let sweep = SweepSpec::from_toml(&fs::read_to_string(root.join("sweep.toml")).unwrap()).unwrap();
    assert_eq!(sweep, SweepSpec::from_toml(&sweep.to_toml()).unwrap());
    assert_eq!(sweep.chis.len() * sweep.mus.values().len(), 9);
    let blow = BlowupConfig::from_toml(&fs::read_to_string(root.join("blowup.toml")).unwrap()).unwrap();
    assert_eq!(blow, BlowupConfig::from_toml(&blow.to_toml()).unwrap());
}

/// The shipped canonical configuration end to end; several minutes.
#[test]
#[ignore]
fn canonical_config_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/canonical.toml");
    let out = tmp.path().join("canonical");
    let o = ksbound(&["run", "--config", root.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for f in ["trajectory.csv", "checks.json", "snapshot_u.txt", "snapshot_v.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

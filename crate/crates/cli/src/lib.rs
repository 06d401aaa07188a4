//! Command implementations behind the `ksbound` binary. Each command
//! returns `Ok(true)` when everything it checks holds, `Ok(false)` when a
//! check failed, and an error otherwise; [`exit_code`] maps that onto the
//! process exit status.

pub mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use ks_core::bounds::{compute_constants, estimate_gn_constant, BoundConstants, InitialNorms, ModelParams};
use ks_core::experiment::{log10_ratio_spread, mu_monotonicity_violations, run_blowup, run_cell, run_parallel, CellResult, SweepSetup};
use ks_core::field::{Domain2D, Field2D};
use ks_core::monitor::{check_all, ratio_diagnostics, CheckReport, TrajectoryRecord};
use ks_core::output::{fmt17, Json};
use ks_core::solver::{run, RunOutcome, RunStatus};

use config::{BlowupConfig, ExperimentConfig, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub fn exit_code(r: &Result<bool, CliError>) -> i32 {
    match r {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECKS_FAILED,
        Err(CliError::Config(_)) | Err(CliError::Io { .. }) => EXIT_CONFIG,
        Err(CliError::Solver(_)) => EXIT_SOLVER,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_with(path, |w| w.write_all(text.as_bytes()))
}

fn write_record(dir: &Path, rec: &TrajectoryRecord) -> Result<(), CliError> {
    write_with(&dir.join("trajectory.csv"), |w| rec.write_csv(w))
}

fn write_snapshot(dir: &Path, u: &Field2D, v: &Field2D) -> Result<(), CliError> {
    write_with(&dir.join("snapshot_u.txt"), |w| u.write_text(w))?;
    write_with(&dir.join("snapshot_v.txt"), |w| v.write_text(w))
}

fn status_json(status: &RunStatus) -> Json {
    Json::object()
        .with("name", status.name())
        .with("time", status.time().unwrap_or(f64::NAN))
}

fn checks_json(outcome_status: &RunStatus, steps: u64, c: &BoundConstants, report: &CheckReport, rec: &TrajectoryRecord) -> Json {
    let r = ratio_diagnostics(rec, c);
    Json::object()
        .with("status", status_json(outcome_status))
        .with("steps", steps)
        .with("all_passed", report.all_passed())
        .with("checks", report.to_json())
        .with(
            "ratios",
            Json::object()
                .with("sup_u_linf", r.sup_u_linf)
                .with("sup_v_w1inf", r.sup_v_w1inf)
                .with("u_ratio", r.u_ratio)
                .with("v_ratio", r.v_ratio)
                .with("log10_u_ratio", r.log10_u_ratio)
                .with("log10_v_ratio", r.log10_v_ratio),
        )
        .with("constants", c.to_json())
}

/// Single run: trajectory, final snapshot and, with checks enabled, the
/// check report. A run that stops early is a solver error even though its
/// partial record is still written.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<bool, CliError> {
    cfg.validate()?;
    let d = cfg.domain.build()?;
    let p = cfg.params()?;
    let (u0, v0) = cfg.initial()?;
    let constants = if cfg.checks {
        let c_gn = cfg.c_gn.resolve(&d, cfg.seed)?;
        Some(
            compute_constants(&p, &InitialNorms::from_fields(&u0, &v0), c_gn, cfg.tau)
                .map_err(|e| CliError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    create_dir(&cfg.output_dir)?;

    let o: RunOutcome = run(&u0, &v0, &p, &cfg.solver).map_err(|e| CliError::Solver(e.to_string()))?;
    write_record(&cfg.output_dir, &o.record)?;
    write_snapshot(&cfg.output_dir, &o.final_state.u, &o.final_state.v)?;

    let passed = match constants {
        Some(c) => {
            let report = check_all(&o.record, &c, cfg.slack).map_err(|e| CliError::Solver(e.to_string()))?;
            write_text(&cfg.output_dir.join("checks.json"), &checks_json(&o.status, o.steps, &c, &report, &o.record).render())?;
            for e in &report.entries {
                println!("{:<24} {:<8} worst {} bound {}", e.name, e.verdict.as_str(), fmt17(e.worst), fmt17(e.bound));
            }
            report.all_passed()
        }
        None => true,
    };
    println!("status {} after {} steps, t = {}", o.status.name(), o.steps, fmt17(o.final_state.t));
    if o.status != RunStatus::Completed {
        return Err(CliError::Solver(format!("run stopped early: {} at t = {}", o.status.name(), fmt17(o.final_state.t))));
    }
    Ok(passed)
}

/// Column order of `summary.csv` before the per-check verdict columns.
pub const SUMMARY_COLUMNS: [&str; 15] = [
    "chi",
    "mu",
    "status",
    "steps",
    "sup_u_linf",
    "sup_v_w1inf",
    "L",
    "N",
    "ln_L",
    "ln_N",
    "u_ratio",
    "v_ratio",
    "log10_u_ratio",
    "log10_v_ratio",
    "all_passed",
];

fn cell_dir(out: &Path, k: usize, c: &CellResult) -> PathBuf {
    out.join(format!("cell_{k:03}_chi_{}_mu_{}", c.chi, c.mu))
}

fn summary_row(c: &CellResult, check_names: &[String]) -> String {
    let nan = f64::NAN;
    let (su, sv, ur, vr, lu, lv) = match c.ratios {
        Some(r) => (r.sup_u_linf, r.sup_v_w1inf, r.u_ratio, r.v_ratio, r.log10_u_ratio, r.log10_v_ratio),
        None => (nan, nan, nan, nan, nan, nan),
    };
    let mut cells = vec![
        fmt17(c.chi),
        fmt17(c.mu),
        c.status.map_or("error", |s| s.name()).to_owned(),
        c.steps.to_string(),
        fmt17(su),
        fmt17(sv),
        fmt17(c.l),
        fmt17(c.n),
        fmt17(c.ln_l),
        fmt17(c.ln_n),
        fmt17(ur),
        fmt17(vr),
        fmt17(lu),
        fmt17(lv),
        c.checks.as_ref().is_some_and(|r| r.all_passed()).to_string(),
    ];
    for name in check_names {
        let v = c.checks.as_ref().and_then(|r| r.get(name)).map_or("missing", |e| e.verdict.as_str());
        cells.push(v.to_owned());
    }
    cells.push(format!("\"{}\"", c.error.as_deref().unwrap_or("").replace('"', "'")));
    cells.join(",")
}

/// Runs every `(χ, μ)` cell on `workers` threads. Each cell writes its own
/// subdirectory; the summary and digest are written once all cells finish.
/// Succeeds only if every cell completed and passed its checks.
pub fn cmd_sweep(spec: &SweepSpec, workers: usize) -> Result<bool, CliError> {
    spec.validate()?;
    let base = &spec.base;
    let d = base.domain.build()?;
    let c_gn = base.c_gn.resolve(&d, base.seed)?;
    let setup = SweepSetup {
        domain: d,
        r: base.model.r,
        u0: base.u0.clone(),
        v0_value: match base.v0 {
            ks_core::solver::InitialKind::Constant { value } => value,
            _ => return Err(CliError::Config("sweeps require a constant v0".into())),
        },
        solver: base.solver,
        c_gn,
        tau: base.tau,
        slack: base.slack,
    };
    let out = &base.output_dir;
    create_dir(out)?;

    let mus = spec.mus.values();
    let cells: Vec<(usize, f64, f64)> = spec
        .chis
        .iter()
        .flat_map(|&c| mus.iter().map(move |&m| (c, m)))
        .enumerate()
        .map(|(k, (c, m))| (k, c, m))
        .collect();
    let results: Vec<Result<CellResult, CliError>> = run_parallel(&cells, workers, |&(k, chi, mu)| {
        let mut cell = run_cell(&setup, chi, mu);
        let dir = cell_dir(out, k, &cell);
        create_dir(&dir)?;
        if let Some(rec) = &cell.record {
            write_record(&dir, rec)?;
        }
        if let (Some(c), Some(rep), Some(rec), Some(status)) = (&cell.constants, &cell.checks, &cell.record, &cell.status) {
            write_text(&dir.join("checks.json"), &checks_json(status, cell.steps, c, rep, rec).render())?;
        }
        cell.record = None;
        Ok(cell)
    });
    let results: Vec<CellResult> = results.into_iter().collect::<Result<_, _>>()?;

    let check_names: Vec<String> = results
        .iter()
        .find_map(|c| c.checks.as_ref())
        .map(|r| r.entries.iter().map(|e| e.name.clone()).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(check_names.iter().cloned());
    header.push("error".into());
    let mut csv = header.join(",") + "\n";
    for c in &results {
        csv += &summary_row(c, &check_names);
        csv.push('\n');
    }
    write_text(&out.join("summary.csv"), &csv)?;

    let spread = log10_ratio_spread(&results);
    let violations = mu_monotonicity_violations(&results, 0.05);
    let completed = results.iter().filter(|c| c.completed()).count();
    let all_ok = results
        .iter()
        .all(|c| c.completed() && c.error.is_none() && c.checks.as_ref().is_some_and(|r| r.all_passed()));
    let nan = f64::NAN;
    let digest = Json::object()
        .with("cells", results.len())
        .with("completed", completed)
        .with("c_gn", c_gn)
        .with(
            "log10_u_ratio",
            Json::object()
                .with("min", spread.map_or(nan, |s| s.0))
                .with("max", spread.map_or(nan, |s| s.1))
                .with("spread", spread.map_or(nan, |s| s.2)),
        )
        .with(
            "mu_monotonicity_violations",
            violations
                .iter()
                .map(|&(chi, a, b)| Json::object().with("chi", chi).with("mu_low", a).with("mu_high", b))
                .collect::<Vec<_>>(),
        )
        .with("all_passed", all_ok);
    write_text(&out.join("digest.json"), &digest.render())?;
    println!("{} cells, {} completed, log10 ratio spread {}", results.len(), completed, spread.map_or(nan, |s| s.2));
    Ok(all_ok)
}

fn blowup_entry(label: &str, mass: f64, critical: f64, o: &RunOutcome) -> Json {
    Json::object()
        .with("label", label)
        .with("mass", mass)
        .with("below_critical", mass < critical)
        .with("status", status_json(&o.status))
        .with("blowup_detected", matches!(o.status, RunStatus::BlowUpDetected { .. }))
        .with("steps", o.steps)
        .with("final_t", o.final_state.t)
        .with("sup_u_linf", o.record.sup_u_linf())
}

/// Runs the mass pair and reports which one hit the blow-up threshold. This
/// is a study: the result is `Ok(true)` whatever the outcome.
pub fn cmd_blowup(cfg: &BlowupConfig, workers: usize) -> Result<bool, CliError> {
    let setup = cfg.setup()?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    let rep = run_blowup(&setup, workers).map_err(|e| CliError::Solver(e.to_string()))?;
    let critical = 4.0 * std::f64::consts::PI / cfg.chi;
    for (label, o) in [("sub", &rep.sub), ("super", &rep.sup)] {
        let dir = out.join(label);
        create_dir(&dir)?;
        write_record(&dir, &o.record)?;
        write_snapshot(&dir, &o.final_state.u, &o.final_state.v)?;
    }
    let json = Json::object()
        .with("chi", cfg.chi)
        .with("critical_mass", critical)
        .with(
            "runs",
            vec![
                blowup_entry("sub", cfg.mass_sub, critical, &rep.sub),
                blowup_entry("super", cfg.mass_super, critical, &rep.sup),
            ],
        );
    write_text(&out.join("blowup.json"), &json.render())?;
    for (label, o) in [("sub", &rep.sub), ("super", &rep.sup)] {
        println!(
            "{label:<6} {:<10} t = {} sup|u| = {}",
            o.status.name(),
            fmt17(o.status.time().unwrap_or(o.final_state.t)),
            fmt17(o.record.sup_u_linf())
        );
    }
    Ok(true)
}

/// Constants as rendered JSON.
pub fn cmd_bounds(p: &ModelParams, ic: &InitialNorms, c_gn: f64, tau: f64) -> Result<String, CliError> {
    compute_constants(p, ic, c_gn, tau)
        .map(|c| c.to_json().render())
        .map_err(|e| CliError::Config(e.to_string()))
}

/// GN estimate and its safety-scaled recommendation as rendered JSON.
pub fn cmd_gn_estimate(d: &Domain2D, samples: usize, seed: u64, safety: f64) -> Result<String, CliError> {
    if !(safety.is_finite() && safety >= 1.0) {
        return Err(CliError::Config(format!("safety must be >= 1, got {safety}")));
    }
    let est = estimate_gn_constant(d, samples, seed).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Json::object()
        .with("samples", samples)
        .with("seed", seed)
        .with("nx", d.nx)
        .with("ny", d.ny)
        .with("estimate", est)
        .with("safety", safety)
        .with("recommended", est * safety)
        .render())
}

//! Multi-run studies: `(χ, μ)` sweeps with shared initial data, and the
//! sub/supercritical mass pair without logistic damping.
//!
//! Runs share nothing mutable. They are spread over a dedicated thread pool
//! and results come back in input order.

use serde::{Deserialize, Serialize};

use crate::bounds::{compute_constants, BoundConstants, InitialNorms, ModelParams};
use crate::field::{Domain2D, Field2D};
use crate::monitor::{check_all, ratio_diagnostics, CheckReport, RatioDiagnostics, Slack, TrajectoryRecord};
use crate::solver::{make_initial, run, InitialKind, RunOutcome, RunStatus, SolverConfig, SolverError};

/// Maps `f` over `items` on at most `workers` threads, preserving order.
pub fn run_parallel<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction");
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Everything a sweep cell needs apart from `(χ, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub domain: Domain2D,
    pub r: f64,
    pub u0: InitialKind,
    /// `v0` is `Constant { value }` for this value; zero by default.
    pub v0_value: f64,
    pub solver: SolverConfig,
    pub c_gn: f64,
    pub tau: f64,
    pub slack: Slack,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub chi: f64,
    pub mu: f64,
    pub status: Option<RunStatus>,
    pub steps: u64,
    pub l: f64,
    pub n: f64,
    pub ln_l: f64,
    pub ln_n: f64,
    pub ratios: Option<RatioDiagnostics>,
    pub checks: Option<CheckReport>,
    pub constants: Option<BoundConstants>,
    pub record: Option<TrajectoryRecord>,
    /// Set when the cell could not run or could not be checked.
    pub error: Option<String>,
}

impl CellResult {
    pub fn completed(&self) -> bool {
        self.status == Some(RunStatus::Completed)
    }
}

/// Runs one `(χ, μ)` cell. Failures are captured in the result.
pub fn run_cell(setup: &SweepSetup, chi: f64, mu: f64) -> CellResult {
    let mut out = CellResult {
        chi,
        mu,
        status: None,
        steps: 0,
        l: f64::NAN,
        n: f64::NAN,
        ln_l: f64::NAN,
        ln_n: f64::NAN,
        ratios: None,
        checks: None,
        constants: None,
        record: None,
        error: None,
    };
    let prepared = (|| -> Result<_, String> {
        let p = ModelParams::new(chi, mu, setup.r, setup.domain.measure()).map_err(|e| e.to_string())?;
        p.require_damping().map_err(|e| e.to_string())?;
        let u0 = make_initial(&setup.u0, &setup.domain).map_err(|e| e.to_string())?;
        let v0 = make_initial(&InitialKind::Constant { value: setup.v0_value }, &setup.domain)
            .map_err(|e| e.to_string())?;
        let c = compute_constants(&p, &InitialNorms::from_fields(&u0, &v0), setup.c_gn, setup.tau)
            .map_err(|e| e.to_string())?;
        Ok((p, u0, v0, c))
    })();
    let (p, u0, v0, c) = match prepared {
        Ok(x) => x,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    out.l = c.paper.l;
    out.n = c.paper.n;
    out.ln_l = c.paper.ln_l;
    out.ln_n = c.paper.ln_n;
    out.constants = Some(c);
    match run(&u0, &v0, &p, &setup.solver) {
        Ok(o) => {
            out.status = Some(o.status);
            out.steps = o.steps;
            out.ratios = Some(ratio_diagnostics(&o.record, &c));
            match check_all(&o.record, &c, setup.slack) {
                Ok(r) => out.checks = Some(r),
                Err(e) => out.error = Some(e.to_string()),
            }
            out.record = Some(o.record);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// All cells of `chis × mus`, χ-major.
pub fn run_sweep(setup: &SweepSetup, chis: &[f64], mus: &[f64], workers: usize) -> Vec<CellResult> {
    let cells: Vec<(f64, f64)> = chis.iter().flat_map(|&c| mus.iter().map(move |&m| (c, m))).collect();
    run_parallel(&cells, workers, |&(chi, mu)| run_cell(setup, chi, mu))
}

/// Spread of `log10(sup‖u‖∞ / L)` over cells that produced a ratio:
/// `(min, max, max − min)`. `None` when no cell did.
pub fn log10_ratio_spread(cells: &[CellResult]) -> Option<(f64, f64, f64)> {
    let vals: Vec<f64> = cells.iter().filter_map(|c| c.ratios.map(|r| r.log10_u_ratio)).collect();
    if vals.is_empty() {
        return None;
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi, hi - lo))
}

/// Pairs `(χ, μ₁, μ₂)` with `μ₁ < μ₂` where `sup‖u‖∞` grows by more than
/// the relative tolerance `tol`.
pub fn mu_monotonicity_violations(cells: &[CellResult], tol: f64) -> Vec<(f64, f64, f64)> {
    let mut bad = Vec::new();
    for a in cells {
        for b in cells {
            if a.chi == b.chi && a.mu < b.mu {
                if let (Some(ra), Some(rb)) = (a.ratios, b.ratios) {
                    if rb.sup_u_linf > ra.sup_u_linf * (1.0 + tol) {
                        bad.push((a.chi, a.mu, b.mu));
                    }
                }
            }
        }
    }
    bad
}

/// Sub/supercritical pair without damping or growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupSetup {
    pub domain: Domain2D,
    pub chi: f64,
    pub mass_sub: f64,
    pub mass_super: f64,
    pub center: (f64, f64),
    pub width: f64,
    pub solver: SolverConfig,
}

impl BlowupSetup {
    pub fn validate(&self) -> Result<(), SolverError> {
        ModelParams::new(self.chi, 0.0, 0.0, self.domain.measure())?;
        self.solver.validate()?;
        if !(self.mass_sub < self.mass_super) {
            return Err(SolverError::Config(format!(
                "need mass_sub < mass_super, got {} and {}",
                self.mass_sub, self.mass_super
            )));
        }
        Ok(())
    }

    /// `u0` for the given mass and `v0 = 0`.
    pub fn initial(&self, mass: f64) -> Result<(Field2D, Field2D), SolverError> {
        let u0 = make_initial(
            &InitialKind::Gaussian { center: self.center, width: self.width, mass },
            &self.domain,
        )?;
        Ok((u0, Field2D::zeros(self.domain)))
    }
}

#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub sub: RunOutcome,
    pub sup: RunOutcome,
}

/// Runs both masses, concurrently when `workers > 1`.
pub fn run_blowup(setup: &BlowupSetup, workers: usize) -> Result<BlowupReport, SolverError> {
    setup.validate()?;
    let p = ModelParams::new(setup.chi, 0.0, 0.0, setup.domain.measure())?;
    let masses = [setup.mass_sub, setup.mass_super];
    let mut outcomes = run_parallel(&masses, workers, |&m| {
        let (u0, v0) = setup.initial(m)?;
        run(&u0, &v0, &p, &setup.solver)
    })
    .into_iter();
    let sub = outcomes.next().expect("two runs")?;
    let sup = outcomes.next().expect("two runs")?;
    Ok(BlowupReport { sub, sup })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, t_end: f64) -> SweepSetup {
        SweepSetup {
            domain: Domain2D::unit_square(n).unwrap(),
            r: 1.0,
            u0: InitialKind::Gaussian { center: (0.5, 0.5), width: 0.1, mass: 1.0 },
            v0_value: 0.0,
            solver: SolverConfig::new(t_end),
            c_gn: 2.0,
            tau: 0.1,
            slack: Slack::default(),
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u32> = (0..20).collect();
        assert_eq!(run_parallel(&items, 3, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn small_sweep_has_one_cell_per_pair() {
        let cells = run_sweep(&setup(16, 0.2), &[1.0, 2.0], &[0.5, 1.0, 2.0], 2);
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[0].chi, cells[0].mu), (1.0, 0.5));
        assert_eq!((cells[5].chi, cells[5].mu), (2.0, 2.0));
        assert!(cells.iter().all(|c| c.completed() && c.error.is_none()), "{cells:?}");
        let (_, _, spread) = log10_ratio_spread(&cells).unwrap();
        assert!(spread.is_finite());
    }

    #[test]
    fn cell_errors_are_captured() {
        let c = run_cell(&setup(16, 0.2), 1.0, 0.0);
        assert!(c.error.is_some());
        assert!(c.status.is_none());
    }

    #[test]
    fn blowup_threshold_below_initial_peak() {
        let mut solver = SolverConfig::new(0.1);
        solver.blowup_threshold = 1.0;
        let s = BlowupSetup {
            domain: Domain2D::unit_square(16).unwrap(),
            chi: 1.0,
            mass_sub: 1.0,
            mass_super: 2.0,
            center: (0.5, 0.5),
            width: 0.05,
            solver,
        };
        let rep = run_blowup(&s, 1).unwrap();
        assert_eq!(rep.sub.status, RunStatus::BlowUpDetected { t: 0.0 });
        assert_eq!(rep.sup.status, RunStatus::BlowUpDetected { t: 0.0 });
        assert_eq!(rep.sub.record.len(), 1);
    }

    #[test]
    fn blowup_setup_validation() {
        let s = BlowupSetup {
            domain: Domain2D::unit_square(16).unwrap(),
            chi: 1.0,
            mass_sub: 3.0,
            mass_super: 2.0,
            center: (0.5, 0.5),
            width: 0.05,
            solver: SolverConfig::new(1.0),
        };
        assert!(s.validate().is_err());
    }
}

//! Norm time series recorded along a run, and the inequality checks that
//! compare them against the explicit constants of [`crate::bounds`].
//!
//! Checks come in three flavours:
//!
//! * pointwise in time: `‖u‖₁ ≤ k₁`, `‖∇v‖²₂ ≤ k₂`, `‖u‖²₂ ≤ l2_rhs`;
//! * windowed space-time integrals over `[t, t + τ]`;
//! * the differential inequality `y' ≤ k₅ y z + k₆` for
//!   `y = ‖u‖²₂ + 4ε/C_GN²`, `z = ‖Δv‖²₂`, both as a discrete derivative and
//!   in its integrated Gronwall form anchored at `s = 0`.
//!
//! Time integrals use the trapezoid rule over the recorded samples.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundConstants;
use crate::field::Norm;
use crate::output::{fmt17, Json};
use crate::solver::State;

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("record spans {span} but the window length is {tau}")]
    WindowTooShort { span: f64, tau: f64 },
}

/// Norms of one state, plus running time integrals up to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub u_l1: f64,
    pub u_l2_sq: f64,
    pub u_l3: f64,
    pub u_linf: f64,
    pub u_min: f64,
    pub v_linf: f64,
    pub gradv_l2_sq: f64,
    pub gradv_linf: f64,
    pub lapv_l2_sq: f64,
    pub cum_u_l2_sq: f64,
    pub cum_gradv_l2_sq: f64,
    pub cum_lapv_l2_sq: f64,
}

/// Column order of [`TrajectoryRecord::write_csv`].
pub const CSV_COLUMNS: [&str; 13] = [
    "t",
    "u_l1",
    "u_l2_sq",
    "u_l3",
    "u_linf",
    "u_min",
    "v_linf",
    "gradv_l2_sq",
    "gradv_linf",
    "lapv_l2_sq",
    "cum_u_l2_sq",
    "cum_gradv_l2_sq",
    "cum_lapv_l2_sq",
];

impl Sample {
    /// Norms of `s`; the cumulative columns are filled in by the record.
    pub fn measure(s: &State) -> Self {
        let l2 = s.u.norm_lp(Norm::L2);
        Self {
            t: s.t,
            u_l1: s.u.norm_lp(Norm::L1),
            u_l2_sq: l2 * l2,
            u_l3: s.u.norm_lp(Norm::L3),
            u_linf: s.u.norm_lp(Norm::Inf),
            u_min: s.u.min(),
            v_linf: s.v.norm_lp(Norm::Inf),
            gradv_l2_sq: s.v.grad_norm_l2_sq(),
            gradv_linf: s.v.grad_linf(),
            lapv_l2_sq: s.v.laplacian_l2_sq(),
            cum_u_l2_sq: 0.0,
            cum_gradv_l2_sq: 0.0,
            cum_lapv_l2_sq: 0.0,
        }
    }

    fn row(&self) -> [f64; 13] {
        [
            self.t,
            self.u_l1,
            self.u_l2_sq,
            self.u_l3,
            self.u_linf,
            self.u_min,
            self.v_linf,
            self.gradv_l2_sq,
            self.gradv_linf,
            self.lapv_l2_sq,
            self.cum_u_l2_sq,
            self.cum_gradv_l2_sq,
            self.cum_lapv_l2_sq,
        ]
    }

    /// Discrete surrogate for `‖v‖_{W^{1,∞}}`.
    pub fn v_w1inf(&self) -> f64 {
        self.v_linf.max(self.gradv_linf)
    }
}

/// Quantities whose space-time integrals are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    USq,
    GradVSq,
    LapVSq,
}

impl Integrand {
    pub fn value(self, s: &Sample) -> f64 {
        match self {
            Integrand::USq => s.u_l2_sq,
            Integrand::GradVSq => s.gradv_l2_sq,
            Integrand::LapVSq => s.lapv_l2_sq,
        }
    }

    pub fn cumulative(self, s: &Sample) -> f64 {
        match self {
            Integrand::USq => s.cum_u_l2_sq,
            Integrand::GradVSq => s.cum_gradv_l2_sq,
            Integrand::LapVSq => s.cum_lapv_l2_sq,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a sample with a strictly later time, extending the
    /// cumulative integrals by one trapezoid panel. Returns `false` (and
    /// drops the sample) when the time does not advance.
    pub fn push(&mut self, mut s: Sample) -> bool {
        match self.samples.last() {
            Some(prev) if s.t <= prev.t => return false,
            Some(prev) => {
                let dt = s.t - prev.t;
                s.cum_u_l2_sq = prev.cum_u_l2_sq + 0.5 * dt * (prev.u_l2_sq + s.u_l2_sq);
                s.cum_gradv_l2_sq = prev.cum_gradv_l2_sq + 0.5 * dt * (prev.gradv_l2_sq + s.gradv_l2_sq);
                s.cum_lapv_l2_sq = prev.cum_lapv_l2_sq + 0.5 * dt * (prev.lapv_l2_sq + s.lapv_l2_sq);
            }
            None => {
                s.cum_u_l2_sq = 0.0;
                s.cum_gradv_l2_sq = 0.0;
                s.cum_lapv_l2_sq = 0.0;
            }
        }
        self.samples.push(s);
        true
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Smallest recorded mass; a diagnostic only.
    pub fn min_mass(&self) -> f64 {
        self.samples.iter().map(|s| s.u_l1).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_u_linf(&self) -> f64 {
        self.samples.iter().map(|s| s.u_linf).fold(0.0, f64::max)
    }

    pub fn sup_v_w1inf(&self) -> f64 {
        self.samples.iter().map(Sample::v_w1inf).fold(0.0, f64::max)
    }

    /// Window index pairs `(a, b)`: for each start sample `a`, `b` is the
    /// first sample with `t_b − t_a ≥ τ`. Windows are therefore never
    /// shorter than `τ`, and exceed it by less than one recording interval.
    pub fn windows(&self, tau: f64) -> Vec<(usize, usize)> {
        let s = &self.samples;
        let mut out = Vec::new();
        let mut b = 0;
        for a in 0..s.len() {
            b = b.max(a);
            while b < s.len() && s[b].t - s[a].t < tau {
                b += 1;
            }
            if b == s.len() {
                break;
            }
            out.push((a, b));
        }
        out
    }

    /// Trapezoid sum of the samples in `[t_a, t_b]`.
    pub fn window_integral_direct(&self, q: Integrand, a: usize, b: usize) -> f64 {
        self.samples[a..=b]
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (q.value(&w[0]) + q.value(&w[1])))
            .sum()
    }

    /// Same integral as a difference of running integrals.
    pub fn window_integral_cumulative(&self, q: Integrand, a: usize, b: usize) -> f64 {
        q.cumulative(&self.samples[b]) - q.cumulative(&self.samples[a])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for s in &self.samples {
            let cells: Vec<String> = s.row().iter().map(|&x| fmt17(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound is `+inf`: satisfied, but says nothing.
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub bound: f64,
    pub worst: f64,
    pub time: f64,
    /// `bound / worst`; `+inf` when nothing positive was observed.
    pub margin: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl CheckEntry {
    /// Verdict for `worst ≤ bound · slack`.
    pub fn judge(name: &str, bound: f64, worst: f64, time: f64, slack: f64) -> Self {
        let verdict = if bound == f64::INFINITY {
            Verdict::Vacuous
        } else if worst <= bound * slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.to_owned(),
            bound,
            worst,
            time,
            margin: if worst > 0.0 { bound / worst } else { f64::INFINITY },
            slack,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn to_json(&self) -> Json {
        Json::object()
            .with("name", self.name.as_str())
            .with("bound", self.bound)
            .with("worst", self.worst)
            .with("time", self.time)
            .with("margin", self.margin)
            .with("verdict", self.verdict.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    /// True when no entry failed. Vacuous entries count as satisfied.
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> Json {
        Json::Array(self.entries.iter().map(CheckEntry::to_json).collect())
    }
}

/// Multiplicative slack factors separating discretization error from
/// genuine violations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Slack {
    /// Checks whose bounds involve no unknown constant.
    pub constant_free: f64,
    /// Checks whose bounds involve `C_GN`.
    pub gn_dependent: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self { constant_free: 1.05, gn_dependent: 1.10 }
    }
}

fn worst_of(rec: &TrajectoryRecord, f: impl Fn(&Sample) -> f64) -> (f64, f64) {
    rec.samples()
        .iter()
        .map(|s| (f(s), s.t))
        .fold((0.0, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// `max_t ‖u‖₁ ≤ k₁`.
pub fn check_l1(rec: &TrajectoryRecord, c: &BoundConstants, slack: f64) -> CheckEntry {
    let (worst, time) = worst_of(rec, |s| s.u_l1);
    CheckEntry::judge("l1", c.k1, worst, time, slack)
}

/// `max_t ‖∇v‖²₂ ≤ k₂`.
pub fn check_gradv(rec: &TrajectoryRecord, c: &BoundConstants, slack: f64) -> CheckEntry {
    let (worst, time) = worst_of(rec, |s| s.gradv_l2_sq);
    CheckEntry::judge("gradv_l2_sq", c.k2, worst, time, slack)
}

/// Windowed integrals of `‖u‖²₂`, `‖∇v‖²₂`, `‖Δv‖²₂` against
/// `k₃`, `k₂`, `k₄` times `max{τ, 1}`. The reported time is the window start.
pub fn check_spacetime(
    rec: &TrajectoryRecord,
    c: &BoundConstants,
    slack: f64,
) -> Result<[CheckEntry; 3], MonitorError> {
    let windows = rec.windows(c.tau);
    if windows.is_empty() {
        return Err(MonitorError::WindowTooShort { span: rec.span(), tau: c.tau });
    }
    let scale = c.tau.max(1.0);
    let entry = |name: &str, q: Integrand, bound: f64| {
        let (worst, time) = windows
            .iter()
            .map(|&(a, b)| (rec.window_integral_cumulative(q, a, b), rec.samples()[a].t))
            .fold((0.0, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best });
        CheckEntry::judge(name, bound * scale, worst, time, slack)
    };
    Ok([
        entry("spacetime_u_l2_sq", Integrand::USq, c.k3),
        entry("spacetime_gradv_l2_sq", Integrand::GradVSq, c.k2),
        entry("spacetime_lapv_l2_sq", Integrand::LapVSq, c.k4),
    ])
}

/// The differential inequality `y' ≤ k₅yz + k₆`.
///
/// The first entry compares the forward difference of `y` between
/// consecutive samples with the right side at the left sample, normalized
/// so that the bound is 1 and `slack = 1 + slack_rel`. The second entry is
/// the integrated form
/// `y(t) ≤ e^{k₅∫₀ᵗz} (y(0) + k₆ ∫₀ᵗ e^{−k₅∫₀^ξ z} dξ)`, evaluated in log
/// space at every recorded `t > 0`; it reports the time of smallest margin.
pub fn check_odi(rec: &TrajectoryRecord, c: &BoundConstants, slack_rel: f64) -> [CheckEntry; 2] {
    let s = rec.samples();
    let slack = 1.0 + slack_rel;
    let y = |x: &Sample| x.u_l2_sq + c.y_offset;

    let mut worst = (f64::NEG_INFINITY, 0.0);
    for w in s.windows(2) {
        let lhs = (y(&w[1]) - y(&w[0])) / (w[1].t - w[0].t);
        let rhs = c.k5 * y(&w[0]) * w[0].lapv_l2_sq + c.k6;
        let ratio = lhs / rhs;
        if ratio > worst.0 {
            worst = (ratio, w[0].t);
        }
    }
    let derivative = if s.len() < 2 {
        CheckEntry::judge("odi_derivative", 1.0, 0.0, 0.0, slack)
    } else {
        CheckEntry::judge("odi_derivative", 1.0, worst.0, worst.1, slack)
    };

    // y(t) / B(t) is exactly 1 at t = 0, so the worst ratio is at least 1
    let ln_b = gronwall_ln_bound(rec, c);
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for (x, lb) in s.iter().zip(&ln_b) {
        let ratio = (y(x).ln() - lb).exp();
        if ratio > worst.0 {
            worst = (ratio, x.t);
        }
    }
    let gronwall = if s.is_empty() {
        CheckEntry::judge("odi_gronwall", 1.0, 0.0, 0.0, slack)
    } else {
        CheckEntry::judge("odi_gronwall", 1.0, worst.0, worst.1, slack)
    };
    [derivative, gronwall]
}

/// `ln B(t)` at every sample, where
/// `B(t) = e^{k₅∫₀ᵗz}(y(0) + k₆∫₀ᵗe^{-k₅∫₀ˢz} ds)` with trapezoid integrals.
pub fn gronwall_ln_bound(rec: &TrajectoryRecord, c: &BoundConstants) -> Vec<f64> {
    let s = rec.samples();
    let Some(first) = s.first() else { return Vec::new() };
    let y0 = first.u_l2_sq + c.y_offset;
    let weight = |x: &Sample| (-c.k5 * x.cum_lapv_l2_sq).exp();
    let mut inner = 0.0;
    let mut out = Vec::with_capacity(s.len());
    out.push(c.k5 * first.cum_lapv_l2_sq + y0.ln());
    for n in 1..s.len() {
        inner += 0.5 * (s[n].t - s[n - 1].t) * (weight(&s[n - 1]) + weight(&s[n]));
        out.push(c.k5 * s[n].cum_lapv_l2_sq + (y0 + c.k6 * inner).ln());
    }
    out
}

/// `max_t ‖u‖²₂` against the uniform bound; vacuous if that bound overflowed.
pub fn check_l2(rec: &TrajectoryRecord, c: &BoundConstants, slack: f64) -> CheckEntry {
    let (worst, time) = worst_of(rec, |s| s.u_l2_sq);
    CheckEntry::judge("l2_uniform", c.l2_rhs, worst, time, slack)
}

/// Observed sup-norms relative to the composite bounds `L` and `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioDiagnostics {
    pub sup_u_linf: f64,
    pub sup_v_w1inf: f64,
    /// `sup ‖u‖∞ / L`; underflows to 0 when `L` is astronomically large.
    pub u_ratio: f64,
    pub v_ratio: f64,
    /// `log10(sup ‖u‖∞ / L)`, finite whenever the numerator is positive.
    pub log10_u_ratio: f64,
    pub log10_v_ratio: f64,
}

pub fn ratio_diagnostics(rec: &TrajectoryRecord, c: &BoundConstants) -> RatioDiagnostics {
    let su = rec.sup_u_linf();
    let sv = rec.sup_v_w1inf();
    let log10_u_ratio = (su.ln() - c.paper.ln_l) / std::f64::consts::LN_10;
    let log10_v_ratio = (sv.ln() - c.paper.ln_n) / std::f64::consts::LN_10;
    RatioDiagnostics {
        sup_u_linf: su,
        sup_v_w1inf: sv,
        u_ratio: 10f64.powf(log10_u_ratio),
        v_ratio: 10f64.powf(log10_v_ratio),
        log10_u_ratio,
        log10_v_ratio,
    }
}

/// Every check with the given slacks. A record shorter than `τ` yields
/// the window error instead of the space-time entries.
pub fn check_all(rec: &TrajectoryRecord, c: &BoundConstants, slack: Slack) -> Result<CheckReport, MonitorError> {
    let mut entries = vec![check_l1(rec, c, slack.constant_free), check_gradv(rec, c, slack.constant_free)];
    entries.extend(check_spacetime(rec, c, slack.constant_free)?);
    entries.extend(check_odi(rec, c, slack.gn_dependent - 1.0));
    entries.push(check_l2(rec, c, slack.gn_dependent));
    Ok(CheckReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_constants, InitialNorms, ModelParams};

    fn sample(t: f64, u_l2_sq: f64, gradv: f64, lapv: f64) -> Sample {
        Sample {
            t,
            u_l1: 1.0,
            u_l2_sq,
            u_l3: 1.0,
            u_linf: 1.0,
            u_min: 1.0,
            v_linf: 1.0,
            gradv_l2_sq: gradv,
            gradv_linf: 0.0,
            lapv_l2_sq: lapv,
            cum_u_l2_sq: 0.0,
            cum_gradv_l2_sq: 0.0,
            cum_lapv_l2_sq: 0.0,
        }
    }

    fn constants() -> BoundConstants {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        compute_constants(&p, &InitialNorms::from_mass(1.0, 0.0, 1.0), 2.0, 1.0).unwrap()
    }

    fn equilibrium_record(n: usize) -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::new();
        for k in 0..n {
            rec.push(sample(k as f64 * 0.1, 1.0, 0.0, 0.0));
        }
        rec
    }

    #[test]
    fn cumulative_integrals_are_trapezoid() {
        let mut rec = TrajectoryRecord::new();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            rec.push(sample(t, t, 2.0 * t, 1.0));
        }
        let last = rec.samples().last().unwrap();
        assert!((last.cum_u_l2_sq - 0.5).abs() < 1e-15);
        assert!((last.cum_gradv_l2_sq - 1.0).abs() < 1e-15);
        assert!((last.cum_lapv_l2_sq - 1.0).abs() < 1e-15);
        assert!(!rec.push(sample(1.0, 0.0, 0.0, 0.0)));
        assert_eq!(rec.len(), 11);
    }

    #[test]
    fn windows_cover_at_least_tau() {
        let rec = equilibrium_record(35);
        let w = rec.windows(1.0);
        assert_eq!(w.first(), Some(&(0, 10)));
        assert!(w.iter().all(|&(a, b)| rec.samples()[b].t - rec.samples()[a].t >= 1.0 - 1e-12));
        assert_eq!(w.len(), 25);
        for &(a, b) in &w {
            let direct = rec.window_integral_direct(Integrand::USq, a, b);
            let cum = rec.window_integral_cumulative(Integrand::USq, a, b);
            assert!((direct - cum).abs() <= 1e-12 * direct.abs());
        }
        assert!(equilibrium_record(5).windows(1.0).is_empty());
    }

    #[test]
    fn spacetime_requires_long_record() {
        let c = constants();
        assert_eq!(
            check_spacetime(&equilibrium_record(5), &c, 1.05).unwrap_err(),
            MonitorError::WindowTooShort { span: 0.4, tau: 1.0 }
        );
    }

    #[test]
    fn zero_trajectory_passes_everything() {
        let mut rec = TrajectoryRecord::new();
        for k in 0..30 {
            let mut s = sample(k as f64 * 0.1, 0.0, 0.0, 0.0);
            s.u_l1 = 0.0;
            s.u_linf = 0.0;
            s.v_linf = 0.0;
            rec.push(s);
        }
        let c = constants();
        let report = check_all(&rec, &c, Slack::default()).unwrap();
        assert!(report.all_passed());
        for name in ["l1", "gradv_l2_sq", "spacetime_u_l2_sq", "spacetime_gradv_l2_sq", "spacetime_lapv_l2_sq"] {
            assert_eq!(report.get(name).unwrap().worst, 0.0, "{name}");
        }
        let r = ratio_diagnostics(&rec, &c);
        assert_eq!((r.u_ratio, r.v_ratio), (0.0, 0.0));
    }

    #[test]
    fn odi_on_equilibrium_reduces_to_k6() {
        let rec = equilibrium_record(20);
        let c = constants();
        let [deriv, gron] = check_odi(&rec, &c, 0.1);
        assert_eq!(deriv.worst, 0.0);
        assert_eq!(deriv.verdict, Verdict::Pass);
        assert_eq!(gron.verdict, Verdict::Pass);
        assert_eq!((gron.worst, gron.time), (1.0, 0.0));
        // with z = 0 the Gronwall bound is y0 + k6 t
        let y0 = 1.0 + c.y_offset;
        for (x, lb) in rec.samples().iter().zip(gronwall_ln_bound(&rec, &c)) {
            let b = y0 + c.k6 * x.t;
            assert!((lb.exp() - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn odi_single_sample_is_identity() {
        let rec = equilibrium_record(1);
        let [d, g] = check_odi(&rec, &constants(), 0.1);
        assert_eq!(d.verdict, Verdict::Pass);
        assert_eq!(g.verdict, Verdict::Pass);
        assert!((g.margin - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odi_detects_fast_growth() {
        let c = constants();
        let mut rec = TrajectoryRecord::new();
        rec.push(sample(0.0, 1.0, 0.0, 0.0));
        rec.push(sample(1e-3, 1.0 + 100.0 * c.k6 * 1e-3, 0.0, 0.0));
        let [d, g] = check_odi(&rec, &c, 0.1);
        assert_eq!(d.verdict, Verdict::Fail);
        assert_eq!(g.verdict, Verdict::Fail);
    }

    #[test]
    fn judge_and_vacuous() {
        let e = CheckEntry::judge("x", 2.0, 2.05, 0.0, 1.05);
        assert_eq!(e.verdict, Verdict::Pass);
        let e = CheckEntry::judge("x", 2.0, 2.2, 0.0, 1.05);
        assert_eq!(e.verdict, Verdict::Fail);
        let e = CheckEntry::judge("x", f64::INFINITY, 1e300, 0.0, 1.0);
        assert_eq!(e.verdict, Verdict::Vacuous);
        assert!(e.passed());
    }

    #[test]
    fn larger_gradient_data_never_flips_gradv_check() {
        let rec = equilibrium_record(12);
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let mut prev_pass = true;
        for g in [0.0, 0.5, 1.0, 10.0] {
            let c = compute_constants(&p, &InitialNorms::from_mass(1.0, g, 1.0), 2.0, 1.0).unwrap();
            let pass = check_gradv(&rec, &c, 1.05).passed();
            assert!(pass || !prev_pass);
            prev_pass = pass;
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let rec = equilibrium_record(3);
        let mut out = Vec::new();
        rec.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1].split(',').count(), CSV_COLUMNS.len());
    }
}

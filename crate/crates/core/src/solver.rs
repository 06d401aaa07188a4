//! Explicit time integration of the logistic Keller-Segel system
//!
//! ```text
//! u_t = ∇·(∇u − χu∇v) + ru − μu²
//! v_t = Δv − v + u
//! ```
//!
//! with homogeneous Neumann data on a rectangle. Each step is an unsplit
//! forward-Euler update of both equations from the old state, with the
//! chemotactic flux upwinded so that the update is a nonnegative combination
//! of old values whenever `dt` respects [`stable_dt`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BoundsError, ModelParams};
use crate::field::{Domain2D, Field2D, FieldError, Norm};
use crate::monitor::{Sample, TrajectoryRecord};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Params(#[from] BoundsError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("invalid initial data: {0}")]
    InitialData(String),
    #[error("non-finite value produced at t = {t}")]
    NonFinite { t: f64 },
    #[error("negative density {min} below tolerance at t = {t}")]
    Negativity { t: f64, min: f64 },
}

fn default_cfl_safety() -> f64 {
    0.4
}
fn default_dt_max() -> f64 {
    f64::INFINITY
}
fn default_blowup_threshold() -> f64 {
    1e6
}
fn default_negativity_tolerance() -> f64 {
    1e-12
}
fn default_record_every() -> u64 {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t_end: f64,
    #[serde(default = "default_cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_negativity_tolerance")]
    pub negativity_tolerance: f64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            t_end,
            cfl_safety: default_cfl_safety(),
            dt_max: default_dt_max(),
            blowup_threshold: default_blowup_threshold(),
            negativity_tolerance: default_negativity_tolerance(),
            record_every: default_record_every(),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(SolverError::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(SolverError::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(SolverError::Config(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(SolverError::Config("blowup_threshold must be > 0".into()));
        }
        if !(self.negativity_tolerance >= 0.0) {
            return Err(SolverError::Config("negativity_tolerance must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(SolverError::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Density `u`, signal `v` and the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field2D,
    pub v: Field2D,
    pub t: f64,
}

impl State {
    pub fn new(u: Field2D, v: Field2D) -> Result<Self, SolverError> {
        if u.domain() != v.domain() {
            return Err(FieldError::DomainMismatch.into());
        }
        Ok(Self { u, v, t: 0.0 })
    }

    pub fn domain(&self) -> &Domain2D {
        self.u.domain()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status")]
pub enum RunStatus {
    Completed,
    BlowUpDetected { t: f64 },
    NegativityError { t: f64 },
    NonFinite { t: f64 },
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUpDetected { .. } => "blowup",
            RunStatus::NegativityError { .. } => "negativity",
            RunStatus::NonFinite { .. } => "nonfinite",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            RunStatus::Completed => None,
            RunStatus::BlowUpDetected { t }
            | RunStatus::NegativityError { t }
            | RunStatus::NonFinite { t } => Some(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Last state that passed every step check.
    pub final_state: State,
    pub record: TrajectoryRecord,
    pub steps: u64,
}

/// Combines the three stability limits. Each limit is a time scale; the
/// step is `safety` times their harmonic combination, which never exceeds
/// `safety` times the smallest one and keeps the explicit update a convex
/// combination of old values for `safety ≤ 1/2`.
fn dt_from_limits(d: &Domain2D, p: &ModelParams, cfg: &SolverConfig, u_linf: f64, gradv_linf: f64) -> f64 {
    let (hx, hy) = (d.hx(), d.hy());
    let h = hx.min(hy);
    // diffusion: 1/dt = 2(1/hx² + 1/hy²), i.e. h²/4 on square cells
    let rate_diff = 2.0 * (1.0 / (hx * hx) + 1.0 / (hy * hy));
    // advection: dt = h / (2χ‖∇v‖∞)
    let rate_adv = 2.0 * p.chi * gradv_linf / h;
    // reaction: dt = 1 / (r + 2μ‖u‖∞ + 1)
    let rate_react = p.r + 2.0 * p.mu * u_linf + 1.0;
    let dt = cfg.cfl_safety / (rate_diff + rate_adv + rate_react);
    dt.min(cfg.dt_max)
}

fn cap_to_end(dt: f64, t: f64, t_end: f64) -> f64 {
    let remaining = t_end - t;
    if remaining > 0.0 && remaining < dt {
        remaining
    } else {
        dt
    }
}

/// Largest admissible step for `s`, capped by `dt_max` and by the time left
/// until `t_end`.
pub fn stable_dt(s: &State, p: &ModelParams, cfg: &SolverConfig) -> f64 {
    let dt = dt_from_limits(s.domain(), p, cfg, s.u.norm_lp(Norm::Inf), s.v.grad_linf());
    cap_to_end(dt, s.t, cfg.t_end)
}

/// Row buffers reused across steps. Face arrays carry a zero flux at both
/// walls so that every cell sees the same stencil.
struct Workspace {
    fxu: Vec<f64>,
    fxv: Vec<f64>,
    south_u: Vec<f64>,
    south_v: Vec<f64>,
    north_u: Vec<f64>,
    north_v: Vec<f64>,
}

impl Workspace {
    fn new(d: &Domain2D) -> Self {
        let z = |n| vec![0.0; n];
        Self {
            fxu: z(d.nx + 1),
            fxv: z(d.nx + 1),
            south_u: z(d.nx),
            south_v: z(d.nx),
            north_u: z(d.nx),
            north_v: z(d.nx),
        }
    }
}

#[inline]
fn face_flux(u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64, chi: f64, a: f64) -> (f64, f64) {
    let gv = v_hi - v_lo;
    let donor = if gv > 0.0 { u_lo } else { u_hi };
    ((u_hi - u_lo - chi * donor * gv) * a, gv * a)
}

fn y_faces(u: &[f64], v: &[f64], lo: usize, nx: usize, chi: f64, ay: f64, fu: &mut [f64], fv: &mut [f64]) {
    let hi = lo + nx;
    let (u_lo, u_hi, v_lo, v_hi) = (&u[lo..hi], &u[hi..hi + nx], &v[lo..hi], &v[hi..hi + nx]);
    let (fu, fv) = (&mut fu[..nx], &mut fv[..nx]);
    for i in 0..nx {
        (fu[i], fv[i]) = face_flux(u_lo[i], u_hi[i], v_lo[i], v_hi[i], chi, ay);
    }
}

/// `(min, max, sum)` with four independent accumulators.
fn row_stats(xs: &[f64]) -> (f64, f64, f64) {
    let (mut lo, mut hi, mut sum) = ([f64::INFINITY; 4], [f64::NEG_INFINITY; 4], [0.0; 4]);
    let chunks = xs.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for l in 0..4 {
            lo[l] = if c[l] < lo[l] { c[l] } else { lo[l] };
            hi[l] = if c[l] > hi[l] { c[l] } else { hi[l] };
            sum[l] += c[l];
        }
    }
    for &x in rest {
        lo[0] = lo[0].min(x);
        hi[0] = hi[0].max(x);
        sum[0] += x;
    }
    (
        lo.iter().copied().fold(f64::INFINITY, f64::min),
        hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sum.iter().sum(),
    )
}

/// `max |a_i − b_i|`.
fn absdiff_max(a: &[f64], b: &[f64]) -> f64 {
    let mut m = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = (x[l] - y[l]).abs();
            m[l] = if d > m[l] { d } else { m[l] };
        }
    }
    for (x, y) in ra.iter().zip(rb) {
        m[0] = m[0].max((x - y).abs());
    }
    m.iter().copied().fold(0.0, f64::max)
}

struct Applied {
    min_u: f64,
    min_v: f64,
    max_u: f64,
    finite: bool,
    /// Face-gradient sup norm of the new `v`.
    gradv_linf: f64,
}

impl Applied {
    fn u_linf(&self) -> f64 {
        self.max_u.max(-self.min_u)
    }
}

/// Writes the forward-Euler update of `(u, v)` into `(out_u, out_v)` in one
/// sweep over the rows, and gathers the statistics of the new state needed
/// by the step checks and the next step size.
#[allow(clippy::too_many_arguments)]
fn advance(
    d: &Domain2D,
    p: &ModelParams,
    u: &[f64],
    v: &[f64],
    dt: f64,
    out_u: &mut [f64],
    out_v: &mut [f64],
    ws: &mut Workspace,
) -> Applied {
    let (nx, ny) = (d.nx, d.ny);
    let (hx, hy) = (d.hx(), d.hy());
    let (ax, ay) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let (chi, r, mu) = (p.chi, p.r, p.mu);
    let Workspace { fxu, fxv, south_u, south_v, north_u, north_v } = ws;
    south_u.fill(0.0);
    south_v.fill(0.0);

    let (mut min_u, mut max_u, mut min_v) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let mut sum = 0.0;
    let (mut gx, mut gy): (f64, f64) = (0.0, 0.0);

    for j in 0..ny {
        let row = j * nx;
        let (ur, vr) = (&u[row..row + nx], &v[row..row + nx]);
        let (fu, fv) = (&mut fxu[1..nx], &mut fxv[1..nx]);
        for (((fu, fv), uw), vw) in fu.iter_mut().zip(fv.iter_mut()).zip(ur.windows(2)).zip(vr.windows(2)) {
            (*fu, *fv) = face_flux(uw[0], uw[1], vw[0], vw[1], chi, ax);
        }
        if j + 1 < ny {
            y_faces(u, v, row, nx, chi, ay, north_u, north_v);
        } else {
            north_u.fill(0.0);
            north_v.fill(0.0);
        }
        let (our, ovr) = (&mut out_u[row..row + nx], &mut out_v[row..row + nx]);
        let (fxu, fxv) = (&fxu[..=nx], &fxv[..=nx]);
        let (nu, nv, su, sv) = (&north_u[..nx], &north_v[..nx], &south_u[..nx], &south_v[..nx]);
        for i in 0..nx {
            let (uk, vk) = (ur[i], vr[i]);
            let du = (fxu[i + 1] - fxu[i]) + (nu[i] - su[i]) + r * uk - mu * uk * uk;
            let dv = (fxv[i + 1] - fxv[i]) + (nv[i] - sv[i]) + uk - vk;
            our[i] = uk + dt * du;
            ovr[i] = vk + dt * dv;
        }
        std::mem::swap(south_u, north_u);
        std::mem::swap(south_v, north_v);

        let (lo, hi, su) = row_stats(our);
        let (lv, _, sv) = row_stats(ovr);
        min_u = min_u.min(lo);
        max_u = max_u.max(hi);
        min_v = min_v.min(lv);
        sum += su + sv;
        gx = gx.max(absdiff_max(&ovr[1..], &ovr[..nx - 1]));
        if j > 0 {
            gy = gy.max(absdiff_max(&out_v[row..row + nx], &out_v[row - nx..row]));
        }
    }
    Applied { min_u, min_v, max_u, finite: sum.is_finite(), gradv_linf: (gx / hx).max(gy / hy) }
}

fn check_applied(a: &Applied, t: f64, cfg: &SolverConfig) -> Result<(), SolverError> {
    if !a.finite {
        return Err(SolverError::NonFinite { t });
    }
    let worst = a.min_u.min(a.min_v);
    if worst < -cfg.negativity_tolerance {
        return Err(SolverError::Negativity { t, min: worst });
    }
    Ok(())
}

/// One forward-Euler step of size `dt` from `s`.
pub fn step(s: &State, p: &ModelParams, cfg: &SolverConfig, dt: f64) -> Result<State, SolverError> {
    let d = *s.domain();
    let mut ws = Workspace::new(&d);
    let mut un = vec![0.0; d.len()];
    let mut vn = vec![0.0; d.len()];
    let applied = advance(&d, p, s.u.values(), s.v.values(), dt, &mut un, &mut vn, &mut ws);
    let t = s.t + dt;
    check_applied(&applied, t, cfg)?;
    Ok(State {
        u: Field2D::from_raw(d, un),
        v: Field2D::from_raw(d, vn),
        t,
    })
}

/// Integrates from `(u0, v0)` at `t = 0` to `cfg.t_end`, recording norms every
/// `cfg.record_every` steps and at the final time. Failures during the run
/// are reported through [`RunOutcome::status`] together with the partial
/// record; only invalid inputs produce an `Err`.
pub fn run(u0: &Field2D, v0: &Field2D, p: &ModelParams, cfg: &SolverConfig) -> Result<RunOutcome, SolverError> {
    p.validate()?;
    cfg.validate()?;
    let mut state = State::new(u0.clone(), v0.clone())?;
    if !(u0.is_finite() && v0.is_finite()) {
        return Err(SolverError::InitialData("non-finite entries".into()));
    }
    if u0.min() < 0.0 || v0.min() < 0.0 {
        return Err(SolverError::InitialData("u0 and v0 must be nonnegative".into()));
    }
    let d = *state.domain();
    let mut record = TrajectoryRecord::new();
    record.push(Sample::measure(&state));
    if u0.norm_lp(Norm::Inf) > cfg.blowup_threshold {
        return Ok(RunOutcome {
            status: RunStatus::BlowUpDetected { t: 0.0 },
            final_state: state,
            record,
            steps: 0,
        });
    }

    let mut ws = Workspace::new(&d);
    let mut next_u = vec![0.0; d.len()];
    let mut next_v = vec![0.0; d.len()];
    let mut steps: u64 = 0;
    let mut status = RunStatus::Completed;

    let (mut u_linf, mut gradv_linf) = (u0.norm_lp(Norm::Inf), v0.grad_linf());
    while state.t < cfg.t_end {
        let dt = cap_to_end(dt_from_limits(&d, p, cfg, u_linf, gradv_linf), state.t, cfg.t_end);
        let applied = advance(&d, p, state.u.values(), state.v.values(), dt, &mut next_u, &mut next_v, &mut ws);
        let t_new = if dt >= cfg.t_end - state.t { cfg.t_end } else { state.t + dt };
        if let Err(e) = check_applied(&applied, t_new, cfg) {
            status = match e {
                SolverError::NonFinite { t } => RunStatus::NonFinite { t },
                SolverError::Negativity { t, .. } => RunStatus::NegativityError { t },
                _ => unreachable!("check_applied only reports step failures"),
            };
            break;
        }
        std::mem::swap(state.u.values_mut_vec(), &mut next_u);
        std::mem::swap(state.v.values_mut_vec(), &mut next_v);
        state.t = t_new;
        steps += 1;
        u_linf = applied.u_linf();
        gradv_linf = applied.gradv_linf;

        let blown = applied.max_u > cfg.blowup_threshold;
        if steps % cfg.record_every == 0 || state.t >= cfg.t_end || blown {
            record.push(Sample::measure(&state));
        }
        if blown {
            status = RunStatus::BlowUpDetected { t: state.t };
            break;
        }
    }

    Ok(RunOutcome { status, final_state: state, record, steps })
}

/// Initial-data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    /// `exp(-|x - center|² / (2 width²))`, rescaled so the discrete integral is `mass`.
    Gaussian { center: (f64, f64), width: f64, mass: f64 },
    Constant { value: f64 },
    /// `value + amplitude · ξ` with `ξ` uniform on `[-1, 1]` per cell.
    PerturbedConstant { value: f64, amplitude: f64, seed: u64 },
}

pub fn make_initial(kind: &InitialKind, d: &Domain2D) -> Result<Field2D, SolverError> {
    let bad = |msg: String| Err(SolverError::InitialData(msg));
    match *kind {
        InitialKind::Gaussian { center: (cx, cy), width, mass } => {
            if !(width > 0.0 && width.is_finite()) {
                return bad(format!("gaussian width must be > 0, got {width}"));
            }
            if !(mass >= 0.0 && mass.is_finite()) {
                return bad(format!("gaussian mass must be >= 0, got {mass}"));
            }
            let a = 0.5 / (width * width);
            let g = Field2D::from_fn(*d, |x, y| (-a * ((x - cx).powi(2) + (y - cy).powi(2))).exp());
            let total = g.integrate();
            if !(total > 0.0) {
                return bad("gaussian has no support on the grid".into());
            }
            Ok(g.scale(mass / total))
        }
        InitialKind::Constant { value } => {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("constant value must be >= 0, got {value}"));
            }
            Ok(Field2D::constant(*d, value))
        }
        InitialKind::PerturbedConstant { value, amplitude, seed } => {
            if !(value.is_finite() && amplitude >= 0.0 && amplitude <= value) {
                return bad(format!("need 0 <= amplitude <= value, got {amplitude}, {value}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..d.len()).map(|_| value + amplitude * rng.gen_range(-1.0..=1.0)).collect();
            Ok(Field2D::new(*d, values)?)
        }
    }
}

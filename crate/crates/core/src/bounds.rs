//! Explicit constants of the a-priori estimates for the logistic
//! Keller-Segel system, and a sampling estimator for the two-dimensional
//! Gagliardo-Nirenberg constant.
//!
//! The composite bounds `E`, `K`, `N`, `L` and the uniform L² bound grow
//! like exponentials of `χ²/μ²` and leave the `f64` range quickly. Each is
//! therefore carried twice: as a plain value (which may be `+inf`) and as
//! its natural logarithm, which stays finite for every admissible input.
//! Orderings between bounds should be decided on the logarithms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Domain2D, Field2D, Norm};
use crate::output::Json;

/// Multiplier applied to the sampled GN estimate before it is used as a bound.
pub const DEFAULT_GN_SAFETY: f64 = 2.0;

/// Window length used by the space-time and L² estimates unless overridden.
pub const DEFAULT_TAU: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("logistic damping mu must be positive for the bound formulas, got {mu}")]
    MuNonpositive { mu: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Coefficients of `u_t = ∇·(∇u − χu∇v) + ru − μu²`, `v_t = Δv − v + u`,
/// together with the domain measure `|Ω|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub chi: f64,
    pub mu: f64,
    pub r: f64,
    pub omega_measure: f64,
}

impl ModelParams {
    pub fn new(chi: f64, mu: f64, r: f64, omega_measure: f64) -> Result<Self, BoundsError> {
        let p = Self { chi, mu, r, omega_measure };
        p.validate()?;
        Ok(p)
    }

    /// Checks the simulation-level invariants. `χ = 0` (pure logistic
    /// diffusion) and `μ = 0` (blow-up studies) are allowed here; the bound
    /// formulas additionally call [`ModelParams::require_damping`].
    pub fn validate(&self) -> Result<(), BoundsError> {
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.chi) {
            return Err(BoundsError::Invalid(format!("chi must be >= 0, got {}", self.chi)));
        }
        if !finite_nonneg(self.mu) {
            return Err(BoundsError::Invalid(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !finite_nonneg(self.r) {
            return Err(BoundsError::Invalid(format!("r must be >= 0, got {}", self.r)));
        }
        if !(self.omega_measure.is_finite() && self.omega_measure > 0.0) {
            return Err(BoundsError::Invalid(format!(
                "omega_measure must be > 0, got {}",
                self.omega_measure
            )));
        }
        Ok(())
    }

    pub fn require_damping(&self) -> Result<(), BoundsError> {
        self.validate()?;
        if self.mu > 0.0 {
            Ok(())
        } else {
            Err(BoundsError::MuNonpositive { mu: self.mu })
        }
    }
}

/// Norms of the initial data entering the constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialNorms {
    pub u0_l1: f64,
    pub u0_l2_sq: f64,
    pub u0_l3_cubed: f64,
    pub u0_linf: f64,
    pub gradv0_l2_sq: f64,
}

impl InitialNorms {
    pub fn from_fields(u0: &Field2D, v0: &Field2D) -> Self {
        let l2 = u0.norm_lp(Norm::L2);
        Self {
            u0_l1: u0.norm_lp(Norm::L1),
            u0_l2_sq: l2 * l2,
            u0_l3_cubed: u0.norm_lp(Norm::L3).powi(3),
            u0_linf: u0.norm_lp(Norm::Inf),
            gradv0_l2_sq: v0.grad_norm_l2_sq(),
        }
    }

    /// Norms known only through `‖u₀‖₁` and `‖∇v₀‖²₂`; the remaining
    /// entries are filled with the smallest values consistent with Hölder on
    /// a domain of measure `omega_measure`.
    pub fn from_mass(u0_l1: f64, gradv0_l2_sq: f64, omega_measure: f64) -> Self {
        let mean = u0_l1 / omega_measure;
        Self {
            u0_l1,
            u0_l2_sq: mean * u0_l1,
            u0_l3_cubed: mean * mean * u0_l1,
            u0_linf: mean,
            gradv0_l2_sq,
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let all = [self.u0_l1, self.u0_l2_sq, self.u0_l3_cubed, self.u0_linf, self.gradv0_l2_sq];
        if !all.iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err(BoundsError::Invalid(format!("initial norms must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }

    /// Same as [`InitialNorms::validate`], plus Cauchy-Schwarz
    /// `‖u₀‖₁ ≤ |Ω|^{1/2} ‖u₀‖₂` up to rounding.
    pub fn validate_on(&self, omega_measure: f64) -> Result<(), BoundsError> {
        self.validate()?;
        let cs = (omega_measure * self.u0_l2_sq).sqrt();
        if self.u0_l1 > cs * (1.0 + 1e-12) {
            return Err(BoundsError::Invalid(format!(
                "u0_l1 = {} exceeds |Omega|^(1/2) * ||u0||_2 = {cs}",
                self.u0_l1
            )));
        }
        Ok(())
    }
}

/// The composite `(χ, μ)` bounds `E`, `M`, `K = ME`, `N`, `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperBounds {
    pub e: f64,
    pub m: f64,
    pub k: f64,
    pub n: f64,
    pub l: f64,
    pub ln_e: f64,
    pub ln_m: f64,
    pub ln_k: f64,
    pub ln_n: f64,
    pub ln_l: f64,
}

/// Every constant of the estimate chain plus the composite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub epsilon: f64,
    pub c_gn: f64,
    pub tau: f64,
    /// Offset `4ε/C_GN²` added to `‖u‖²₂` in the differential inequality.
    pub y_offset: f64,
    pub paper: PaperBounds,
    pub l2_rhs: f64,
    pub ln_l2_rhs: f64,
}

impl BoundConstants {
    /// True when any composite bound left the `f64` range.
    pub fn overflowed(&self) -> bool {
        let p = &self.paper;
        [p.e, p.k, p.n, p.l, self.l2_rhs].iter().any(|x| x.is_infinite())
    }

    /// Flat key-value object with the field names used by the CLI.
    pub fn to_json(&self) -> Json {
        let p = &self.paper;
        Json::object()
            .with("k1", self.k1)
            .with("k2", self.k2)
            .with("k3", self.k3)
            .with("k4", self.k4)
            .with("k5", self.k5)
            .with("k6", self.k6)
            .with("k7", self.k7)
            .with("epsilon", self.epsilon)
            .with("c_gn", self.c_gn)
            .with("tau", self.tau)
            .with("E", p.e)
            .with("M", p.m)
            .with("K", p.k)
            .with("N", p.n)
            .with("L", p.l)
            .with("l2_rhs", self.l2_rhs)
            .with("ln_E", p.ln_e)
            .with("ln_K", p.ln_k)
            .with("ln_N", p.ln_n)
            .with("ln_L", p.ln_l)
            .with("ln_l2_rhs", self.ln_l2_rhs)
            .with("vacuous", self.overflowed())
    }
}

/// `ε = min{1, 2/χ}`.
pub fn epsilon(chi: f64) -> f64 {
    (2.0 / chi).min(1.0)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn check_inputs(p: &ModelParams, ic: &InitialNorms, c_gn: f64) -> Result<(), BoundsError> {
    p.require_damping()?;
    ic.validate_on(p.omega_measure)?;
    if !(c_gn.is_finite() && c_gn > 0.0) {
        return Err(BoundsError::Invalid(format!("c_gn must be > 0, got {c_gn}")));
    }
    Ok(())
}

/// `ln E(χ, μ)`: the exponent of the Gronwall factor.
pub fn ln_e(p: &ModelParams, ic: &InitialNorms, c_gn: f64) -> f64 {
    let ModelParams { chi, mu, r, omega_measure: om } = *p;
    let bracket = (r + 3.0) / mu * ic.u0_l1
        + (r + 1.0).powi(3) / (4.0 * mu * mu) * om
        + ic.gradv0_l2_sq
        + (r + 2.0).powi(2) / (2.0 * mu * mu) * om;
    chi * c_gn * c_gn / (2.0 * epsilon(chi)) * bracket
}

pub fn compute_paper_bounds(
    p: &ModelParams,
    ic: &InitialNorms,
    c_gn: f64,
) -> Result<PaperBounds, BoundsError> {
    check_inputs(p, ic, c_gn)?;
    let (chi, mu) = (p.chi, p.mu);
    let base = 1.0 + 1.0 / mu;
    let ln_base = base.ln();

    let ln_e = ln_e(p, ic, c_gn);
    let m = base + chi.sqrt() * (1.0 + 1.0 / (mu * mu));
    let ln_m = m.ln();
    let ln_k = ln_m + ln_e;
    // N = 1 + 1/μ + χ^{8/3} K^{8/3} / μ
    let ln_n = log_add_exp(ln_base, 8.0 / 3.0 * (chi.ln() + ln_k) - mu.ln());
    // L = 1 + 1/μ + χ K N
    let ln_l = log_add_exp(ln_base, chi.ln() + ln_k + ln_n);

    Ok(PaperBounds {
        e: ln_e.exp(),
        m,
        k: ln_k.exp(),
        n: ln_n.exp(),
        l: ln_l.exp(),
        ln_e,
        ln_m,
        ln_k,
        ln_n,
        ln_l,
    })
}

pub fn compute_constants(
    p: &ModelParams,
    ic: &InitialNorms,
    c_gn: f64,
    tau: f64,
) -> Result<BoundConstants, BoundsError> {
    check_inputs(p, ic, c_gn)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(BoundsError::Invalid(format!("tau must be > 0, got {tau}")));
    }
    let ModelParams { chi, mu, r, omega_measure: om } = *p;
    let c2 = c_gn * c_gn;

    let k1 = ic.u0_l1 + (r + 1.0).powi(2) / (4.0 * mu) * om;
    let k2 = 2.0 / mu * (ic.u0_l1 + mu / 2.0 * ic.gradv0_l2_sq + (r + 2.0).powi(2) / (4.0 * mu) * om);
    let k3 = (r + 1.0) * k1 / mu;
    let k4 = k3 + k2;
    let eps = epsilon(chi);
    let k5 = chi * c2 / (4.0 * eps);
    let k6 = chi * k1.powi(4) * c2 / 4.0 + 8.0 * r.powi(3) / (27.0 * mu * mu) * om;
    let y_offset = 4.0 * eps / c2;
    let k7 = k3 + y_offset;

    let paper = compute_paper_bounds(p, ic, c_gn)?;

    let brace = ic.u0_l2_sq
        + 8.0 * eps / c2
        + 3.0 * chi * c2 / 4.0 * k1.powi(4)
        + (r + 1.0) / mu * ic.u0_l1
        + (r + 1.0).powi(3) / (4.0 * mu * mu) * om
        + 8.0 * r.powi(3) / (9.0 * mu * mu) * om;
    let window = 1.0f64.max(tau).max(1.0 / tau);
    let ln_l2_rhs = brace.ln() + window.ln() + paper.ln_e * 1.0f64.max(tau);

    Ok(BoundConstants {
        k1,
        k2,
        k3,
        k4,
        k5,
        k6,
        k7,
        epsilon: eps,
        c_gn,
        tau,
        y_offset,
        paper,
        l2_rhs: ln_l2_rhs.exp(),
        ln_l2_rhs,
    })
}

/// The constant steady state `(r/μ, r/μ)`.
pub fn equilibrium(p: &ModelParams) -> Result<(f64, f64), BoundsError> {
    p.require_damping()?;
    let c = p.r / p.mu;
    Ok((c, c))
}

/// `‖w‖²_{L⁴} / (‖∇w‖₂‖w‖₂ + ‖w‖₁²)`, the quotient bounded by `C_GN`.
pub fn gn_ratio(w: &Field2D) -> f64 {
    let l4 = w.norm_lp(Norm::L4);
    let denom = w.grad_norm_l2_sq().sqrt() * w.norm_lp(Norm::L2) + w.norm_lp(Norm::L1).powi(2);
    l4 * l4 / denom
}

/// Sample `index` of the estimator's sequence: the constant field first, then
/// sums of one to four Gaussian bumps with random centers, widths and heights.
fn gn_sample(d: &Domain2D, index: usize, rng: &mut ChaCha8Rng) -> Field2D {
    if index == 0 {
        return Field2D::constant(*d, 1.0);
    }
    let side = d.lx.min(d.ly);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let cx = rng.gen_range(0.0..d.lx);
            let cy = rng.gen_range(0.0..d.ly);
            let width = rng.gen_range(0.02..0.5) * side;
            let height = rng.gen_range(0.1..1.0);
            (cx, cy, 0.5 / (width * width), height)
        })
        .collect();
    Field2D::from_fn(*d, |x, y| {
        bumps
            .iter()
            .map(|&(cx, cy, a, h)| h * (-a * ((x - cx).powi(2) + (y - cy).powi(2))).exp())
            .sum()
    })
}

/// Running maxima of [`gn_ratio`] over the first `n_samples` samples.
pub fn gn_running_max(d: &Domain2D, n_samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    (0..n_samples)
        .map(|k| {
            let ratio = gn_ratio(&gn_sample(d, k, &mut rng));
            if ratio.is_finite() {
                best = best.max(ratio);
            }
            best
        })
        .collect()
}

/// Lower estimate of the discrete GN constant on `d`. Deterministic in `seed`;
/// the sample sequence for `n` is a prefix of the one for `n + 1`.
pub fn estimate_gn_constant(d: &Domain2D, n_samples: usize, seed: u64) -> Result<f64, BoundsError> {
    if n_samples == 0 {
        return Err(BoundsError::Invalid("n_samples must be >= 1".into()));
    }
    Ok(*gn_running_max(d, n_samples, seed).last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(chi: f64, mu: f64, r: f64) -> ModelParams {
        ModelParams::new(chi, mu, r, 1.0).unwrap()
    }

    fn ic2() -> InitialNorms {
        InitialNorms::from_mass(2.0, 0.0, 1.0)
    }

    #[test]
    fn initial_norms_respect_cauchy_schwarz() {
        InitialNorms::from_mass(2.0, 0.0, 1.0).validate_on(1.0).unwrap();
        let mut ic = InitialNorms::from_mass(2.0, 0.0, 1.0);
        ic.u0_l2_sq = 3.0;
        assert!(ic.validate_on(1.0).is_err());
        assert!(compute_constants(&params(1.0, 1.0, 1.0), &ic, 1.0, 1.0).is_err());
        ic.u0_l1 = -1.0;
        assert!(ic.validate().is_err());
    }

    #[test]
    fn lemma_constants_reference_case() {
        let c = compute_constants(&params(1.0, 1.0, 1.0), &ic2(), 1.0, 1.0).unwrap();
        assert_eq!(c.k1, 3.0);
        assert_eq!(c.k2, 8.5);
        assert_eq!(c.k3, 6.0);
        assert_eq!(c.k4, 14.5);
        assert_eq!(c.epsilon, 1.0);
        assert_eq!(c.k4, c.k3 + c.k2);
        assert_eq!(c.k7, c.k3 + 4.0 * c.epsilon / (c.c_gn * c.c_gn));
    }

    #[test]
    fn epsilon_switches_at_two() {
        assert_eq!(epsilon(5.0), 0.4);
        assert_eq!(epsilon(2.0), 1.0);
        assert_eq!(epsilon(0.5), 1.0);
    }

    #[test]
    fn k6_without_growth() {
        let p = params(3.0, 0.7, 0.0);
        let c = compute_constants(&p, &ic2(), 1.7, 1.0).unwrap();
        assert_eq!(c.k6, 3.0 * c.k1.powi(4) * 1.7 * 1.7 / 4.0);
    }

    #[test]
    fn e_reference_value() {
        let b = compute_paper_bounds(&params(1.0, 1.0, 1.0), &ic2(), 1.0).unwrap();
        assert_eq!(b.ln_e, 7.25);
        assert!((b.e - 1408.1048482046).abs() < 1e-8);
        assert!((b.k / (b.m * b.e) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vanishing_sensitivity_limit() {
        let b = compute_paper_bounds(&params(1e-12, 2.0, 1.0), &ic2(), 1.0).unwrap();
        assert!((b.e - 1.0).abs() < 1e-9);
        assert!((b.m - 1.5).abs() < 1e-5);
    }

    #[test]
    fn overflow_is_reported_not_fatal() {
        let c = compute_constants(&params(50.0, 0.1, 1.0), &ic2(), 2.0, 1.0).unwrap();
        assert!(c.paper.e.is_infinite());
        assert!(c.l2_rhs.is_infinite());
        assert!(c.paper.ln_l.is_finite() && c.ln_l2_rhs.is_finite());
        assert!(c.overflowed());
    }

    #[test]
    fn zero_damping_rejected() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(compute_constants(&p, &ic2(), 1.0, 1.0), Err(BoundsError::MuNonpositive { mu: 0.0 }));
        assert_eq!(equilibrium(&p), Err(BoundsError::MuNonpositive { mu: 0.0 }));
        assert!(ModelParams::new(-1.0, 1.0, 0.0, 1.0).is_err());
        assert!(compute_constants(&params(1.0, 1.0, 1.0), &ic2(), 1.0, 0.0).is_err());
    }

    #[test]
    fn equilibrium_examples() {
        assert_eq!(equilibrium(&params(1.0, 1.0, 1.0)).unwrap(), (1.0, 1.0));
        assert_eq!(equilibrium(&params(1.0, 1.0, 0.0)).unwrap(), (0.0, 0.0));
        assert_eq!(equilibrium(&params(1.0, 4.0, 2.0)).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn gn_constant_field_ratio_is_one() {
        let d = Domain2D::unit_square(32).unwrap();
        assert!((gn_ratio(&Field2D::constant(d, 3.0)) - 1.0).abs() < 1e-14);
        assert_eq!(estimate_gn_constant(&d, 1, 99).unwrap(), gn_ratio(&Field2D::constant(d, 1.0)));
        assert!(estimate_gn_constant(&d, 0, 1).is_err());
    }

    #[test]
    fn gn_estimate_is_a_running_max() {
        let d = Domain2D::unit_square(32).unwrap();
        let trace = gn_running_max(&d, 60, 3);
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(estimate_gn_constant(&d, 30, 3).unwrap(), trace[29]);
    }

    proptest! {
        #[test]
        fn gn_ratio_is_scale_invariant(seed in 0u64..200, a in 0.01f64..100.0) {
            let d = Domain2D::unit_square(16).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = gn_sample(&d, 1, &mut rng);
            let (r1, r2) = (gn_ratio(&w), gn_ratio(&w.scale(a)));
            prop_assert!((r1 - r2).abs() <= 1e-12 * r1);
        }

        #[test]
        fn bounds_dominate_their_floors(chi in 0.01f64..100.0, mu in 0.01f64..100.0, r in 0.0f64..3.0) {
            let c = compute_constants(&params(chi, mu, r), &ic2(), 1.3, 1.0).unwrap();
            let b = c.paper;
            let floor = (1.0 + 1.0 / mu).ln();
            prop_assert!(b.ln_e >= 0.0);
            prop_assert!(b.ln_k >= b.ln_m);
            prop_assert!(b.ln_l >= floor && b.ln_n >= floor);
            prop_assert!(c.k1 > 0.0 && c.k2 > 0.0 && c.k5 > 0.0 && c.k6 > 0.0 && c.k7 > 0.0);
        }
    }
}

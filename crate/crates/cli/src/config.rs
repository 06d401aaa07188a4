//! TOML experiment descriptions. See `docs/config.md` for the schema.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use ks_core::bounds::{estimate_gn_constant, ModelParams, DEFAULT_GN_SAFETY, DEFAULT_TAU};
use ks_core::experiment::BlowupSetup;
use ks_core::field::{Domain2D, Field2D};
use ks_core::monitor::Slack;
use ks_core::solver::{make_initial, InitialKind, SolverConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain2D, CliError> {
        Domain2D::new(self.lx, self.ly, self.nx, self.ny).map_err(|e| CliError::Config(format!("domain: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub chi: f64,
    pub mu: f64,
    pub r: f64,
}

/// Where the Gagliardo-Nirenberg constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GnSource {
    Fixed { value: f64 },
    /// Sampled lower estimate on the run's grid, times `safety`.
    Estimate {
        samples: usize,
        #[serde(default = "default_safety")]
        safety: f64,
    },
}

impl Default for GnSource {
    fn default() -> Self {
        GnSource::Estimate { samples: 500, safety: DEFAULT_GN_SAFETY }
    }
}

impl GnSource {
    pub fn resolve(&self, d: &Domain2D, seed: u64) -> Result<f64, CliError> {
        match *self {
            GnSource::Fixed { value } => Ok(value),
            GnSource::Estimate { samples, safety } => estimate_gn_constant(d, samples, seed)
                .map(|c| c * safety)
                .map_err(|e| CliError::Config(format!("c_gn: {e}"))),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let ok = match *self {
            GnSource::Fixed { value } => value.is_finite() && value > 0.0,
            GnSource::Estimate { samples, safety } => samples >= 1 && safety.is_finite() && safety >= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("c_gn: need a positive fixed value or samples >= 1 with safety >= 1, got {self:?}")))
        }
    }
}

fn default_safety() -> f64 {
    DEFAULT_GN_SAFETY
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_v0() -> InitialKind {
    InitialKind::Constant { value: 0.0 }
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// One simulation plus its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_true")]
    pub checks: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub domain: DomainSpec,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub u0: InitialKind,
    #[serde(default = "default_v0")]
    pub v0: InitialKind,
    #[serde(default)]
    pub c_gn: GnSource,
    #[serde(default)]
    pub slack: Slack,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let d = self.domain.build()?;
        ModelParams::new(self.model.chi, self.model.mu, self.model.r, d.measure())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn initial(&self) -> Result<(Field2D, Field2D), CliError> {
        let d = self.domain.build()?;
        let mk = |k: &InitialKind| make_initial(k, &d).map_err(|e| CliError::Config(e.to_string()));
        Ok((mk(&self.u0)?, mk(&self.v0)?))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.params()?;
        if self.checks {
            p.require_damping()
                .map_err(|e| CliError::Config(format!("{e}; set checks = false to simulate without damping")))?;
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(CliError::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.checks && self.solver.t_end < self.tau {
            return Err(CliError::Config(format!(
                "t_end = {} is shorter than the window tau = {}",
                self.solver.t_end, self.tau
            )));
        }
        if !(self.slack.constant_free >= 1.0 && self.slack.gn_dependent >= 1.0) {
            return Err(CliError::Config(format!("slack factors must be >= 1, got {:?}", self.slack)));
        }
        self.c_gn.validate()?;
        self.initial()?;
        Ok(())
    }
}

/// `μ` values: an explicit list or `count` log-spaced points in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuList {
    List(Vec<f64>),
    LogSpaced { min: f64, max: f64, count: usize },
}

impl MuList {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            MuList::List(ref v) => v.clone(),
            MuList::LogSpaced { min, max, count } => match count {
                0 => Vec::new(),
                1 => vec![min],
                _ => {
                    let (a, b) = (min.ln(), max.ln());
                    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub chis: Vec<f64>,
    pub mus: MuList,
    /// Shared settings; its `model.chi` and `model.mu` are replaced per cell.
    pub base: ExperimentConfig,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let spec: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep spec serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mus = self.mus.values();
        if self.chis.is_empty() || mus.is_empty() {
            return Err(CliError::Config("chis and mus must be non-empty".into()));
        }
        if let Some(m) = mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(CliError::Config(format!("every mu must be > 0, got {m}")));
        }
        if let Some(c) = self.chis.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(CliError::Config(format!("every chi must be >= 0, got {c}")));
        }
        let mut probe = self.base.clone();
        probe.model.mu = mus[0];
        probe.validate()
    }
}

/// Sub/supercritical pair without damping. The model has no `μ` or `r`
/// field: both are zero by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    pub chi: f64,
    pub mass_sub: f64,
    pub mass_super: f64,
    pub center: (f64, f64),
    pub width: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub domain: DomainSpec,
    pub solver: SolverConfig,
}

impl BlowupConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.setup()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("blowup config serializes")
    }

    pub fn setup(&self) -> Result<BlowupSetup, CliError> {
        let s = BlowupSetup {
            domain: self.domain.build()?,
            chi: self.chi,
            mass_sub: self.mass_sub,
            mass_super: self.mass_super,
            center: self.center,
            width: self.width,
            solver: self.solver,
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        s.initial(self.mass_super).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ks_cli::config::{BlowupConfig, ExperimentConfig, SweepSpec};
use ks_cli::{cmd_blowup, cmd_bounds, cmd_gn_estimate, cmd_run, cmd_sweep, exit_code, CliError};
use ks_core::bounds::{InitialNorms, ModelParams, DEFAULT_GN_SAFETY, DEFAULT_TAU};
use ks_core::field::Domain2D;

/// Keller-Segel simulations checked against explicit a-priori bounds.
#[derive(Parser)]
#[command(name = "ksbound", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single run with all checks.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// (chi, mu) grid of runs.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sub- and supercritical mass pair without damping.
    Blowup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
    /// Print the bound constants as JSON.
    Bounds {
        /// Take parameters and initial norms from a run configuration.
        #[arg(long, conflicts_with_all = ["chi", "mu", "r", "omega", "u0_l1", "u0_l2_sq", "gradv0_l2_sq"])]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        chi: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Domain measure |Ω|.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        u0_l1: f64,
        /// Defaults to the value for constant u0 of the given mass.
        #[arg(long)]
        u0_l2_sq: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        gradv0_l2_sq: f64,
        /// Fixed C_GN; with --config the configured source is used instead.
        #[arg(long, default_value_t = 1.0)]
        c_gn: f64,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sampled lower estimate of the Gagliardo-Nirenberg constant.
    GnEstimate {
        #[arg(long, default_value_t = 1.0)]
        lx: f64,
        #[arg(long, default_value_t = 1.0)]
        ly: f64,
        #[arg(long, default_value_t = 128)]
        nx: usize,
        #[arg(long, default_value_t = 128)]
        ny: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_GN_SAFETY)]
        safety: f64,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn print(json: Result<String, CliError>) -> Result<bool, CliError> {
    json.map(|s| {
        print!("{s}");
        true
    })
}

fn dispatch(cmd: Cmd) -> Result<bool, CliError> {
    match cmd {
        Cmd::Run { common, seed } => {
            let mut cfg = ExperimentConfig::from_toml(&read(&common.config)?)?;
            if let Some(out) = common.out {
                cfg.output_dir = out;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_run(&cfg)
        }
        Cmd::Sweep { common, workers, seed } => {
            let mut spec = SweepSpec::from_toml(&read(&common.config)?)?;
            if let Some(out) = common.out {
                spec.base.output_dir = out;
            }
            if let Some(s) = seed {
                spec.base.seed = s;
            }
            cmd_sweep(&spec, workers)
        }
        Cmd::Blowup { common, workers } => {
            let mut cfg = BlowupConfig::from_toml(&read(&common.config)?)?;
            if let Some(out) = common.out {
                cfg.output_dir = out;
            }
            cmd_blowup(&cfg, workers)
        }
        Cmd::Bounds { config: Some(path), tau, seed, .. } => {
            let mut cfg: ExperimentConfig =
                toml::from_str(&read(&path)?).map_err(|e| CliError::Config(e.to_string()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let d = cfg.domain.build()?;
            let p = cfg.params()?;
            let (u0, v0) = cfg.initial()?;
            let c_gn = cfg.c_gn.resolve(&d, cfg.seed)?;
            print(cmd_bounds(&p, &InitialNorms::from_fields(&u0, &v0), c_gn, tau.unwrap_or(cfg.tau)))
        }
        Cmd::Bounds { config: None, chi, mu, r, omega, u0_l1, u0_l2_sq, gradv0_l2_sq, c_gn, tau, .. } => {
            let p = ModelParams::new(chi, mu, r, omega).map_err(|e| CliError::Config(e.to_string()))?;
            let mut ic = InitialNorms::from_mass(u0_l1, gradv0_l2_sq, omega);
            if let Some(l2) = u0_l2_sq {
                ic.u0_l2_sq = l2;
            }
            print(cmd_bounds(&p, &ic, c_gn, tau.unwrap_or(DEFAULT_TAU)))
        }
        Cmd::GnEstimate { lx, ly, nx, ny, samples, seed, safety } => {
            let d = Domain2D::new(lx, ly, nx, ny).map_err(|e| CliError::Config(e.to_string()))?;
            print(cmd_gn_estimate(&d, samples, seed, safety))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(cli.cmd);
    match &result {
        Err(e) => eprintln!("ksbound: {e}"),
        Ok(false) => eprintln!("ksbound: one or more checks failed"),
        Ok(true) => {}
    }
    ExitCode::from(exit_code(&result) as u8)
}

//! Plumbing behind the `polcmt` binary: configuration, subcommands and output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use polariton_cmt::fit::{FitParam, Observable};

use config::{Format, RunConfig};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "polcmt", version, about = "Coupled-mode spectra, coherent absorption and critical coupling maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-beam R1, R2, T, A1, A2, B and |det S| over the energy grid.
    Spectrum(Common),
    /// Output intensities and joint absorbance versus input dephasing at one energy.
    SweepPhase {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
        #[arg(long)]
        n_phases: Option<usize>,
    },
    /// Joint absorbance extrema, Δψ and |det S| reconstruction over the grid.
    Joint {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_phases: Option<usize>,
    },
    /// Regime and critical-coupling map over a 2D rate sweep.
    PhaseDiagram(Common),
    /// Real-frequency minima of |det S| and the dephasing that reaches them.
    Cpa {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        tol: Option<f64>,
    },
    /// Closed-form versus time-domain joint absorbance.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_omega: Option<usize>,
        #[arg(long)]
        n_phases: Option<usize>,
    },
    /// Synthetic dataset with optional Gaussian noise.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, allow_negative_numbers = true)]
        noise_sigma: Option<f64>,
        /// Comma-separated observables, e.g. R1,T,dpsi.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<Observable>>,
    },
    /// Least-squares fit of model parameters to a dataset.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated free parameters, e.g. omega0,gamma_r.
        #[arg(long, value_delimiter = ',', value_parser = parse_fit_param)]
        free: Option<Vec<FitParam>>,
    },
}

/// Options shared by every subcommand; each overrides the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_nr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_rabi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta_m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_n: Option<usize>,
}

fn parse_fit_param(s: &str) -> Result<FitParam, String> {
    FitParam::ALL
        .into_iter()
        .find(|fp| fp.name() == s)
        .ok_or_else(|| format!("unknown parameter `{s}`"))
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => config::load_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.output {
            cfg.output.path = Some(p.clone());
        }
        set(&mut cfg.output.format, self.format);
        let m = &mut cfg.model;
        set(&mut m.omega0, self.omega0);
        set(&mut m.gamma_r, self.gamma_r);
        set(&mut m.gamma_nr, self.gamma_nr);
        set(&mut m.gamma_m, self.gamma_m);
        set(&mut m.omega_rabi, self.omega_rabi);
        set(&mut m.delta_m, self.delta_m);
        set(&mut cfg.background.r_b, self.r_b);
        set(&mut cfg.background.theta_b, self.theta_b);
        set(&mut cfg.grid.min, self.grid_min);
        set(&mut cfg.grid.max, self.grid_max);
        set(&mut cfg.grid.n, self.grid_n);
        Ok(cfg)
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::SweepPhase { .. } => "sweep-phase",
            Command::Joint { .. } => "joint",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::Cpa { .. } => "cpa",
            Command::OracleCheck { .. } => "oracle-check",
            Command::Synth { .. } => "synth",
            Command::Fit { .. } => "fit",
        }
    }

    /// Effective configuration after applying this command's flags.
    pub fn config(&self) -> CliResult<RunConfig> {
        let cfg = match self {
            Command::Spectrum(c) | Command::PhaseDiagram(c) => c.resolve()?,
            Command::SweepPhase { common, omega, n_phases } => {
                let mut cfg = common.resolve()?;
                if omega.is_some() {
                    cfg.sweep_phase.omega = *omega;
                }
                set(&mut cfg.sweep_phase.n_phases, *n_phases);
                cfg
            }
            Command::Joint { common, n_phases } => {
                let mut cfg = common.resolve()?;
                set(&mut cfg.joint.n_phases, *n_phases);
                cfg
            }
            Command::Cpa { common, tol } => {
                let mut cfg = common.resolve()?;
                set(&mut cfg.cpa.tol, *tol);
                cfg
            }
            Command::OracleCheck {
                common,
                n_omega,
                n_phases,
            } => {
                let mut cfg = common.resolve()?;
                set(&mut cfg.oracle_check.n_omega, *n_omega);
                set(&mut cfg.oracle_check.n_phases, *n_phases);
                cfg
            }
            Command::Synth {
                common,
                seed,
                noise_sigma,
                kinds,
            } => {
                let mut cfg = common.resolve()?;
                set(&mut cfg.synth.seed, *seed);
                set(&mut cfg.synth.noise_sigma, *noise_sigma);
                if let Some(k) = kinds {
                    cfg.synth.kinds = k.clone();
                }
                cfg
            }
            Command::Fit { common, data, free } => {
                let mut cfg = common.resolve()?;
                if data.is_some() {
                    cfg.fit.data = data.clone();
                }
                if let Some(f) = free {
                    cfg.fit.free = f.clone();
                }
                cfg
            }
        };
        Ok(cfg)
    }
}

/// Resolves the configuration, runs the command and writes its outputs.
pub fn run(cli: &Cli) -> CliResult<PathBuf> {
    let cfg = cli.command.config()?;
    let product = match cli.command {
        Command::Spectrum(_) => commands::spectrum(&cfg),
        Command::SweepPhase { .. } => commands::sweep_phase(&cfg),
        Command::Joint { .. } => commands::joint(&cfg),
        Command::PhaseDiagram(_) => commands::phase_diagram(&cfg),
        Command::Cpa { .. } => commands::cpa(&cfg),
        Command::OracleCheck { .. } => commands::oracle_check(&cfg),
        Command::Synth { .. } => commands::synth(&cfg),
        Command::Fit { .. } => commands::fit(&cfg),
    }?;
    let path = output::emit(&cfg, cli.command.name(), &product)?;
    if product.empty_result {
        eprintln!("{}: empty result (nothing found)", cli.command.name());
    }
    Ok(path)
}

impl From<CliError> for std::process::ExitCode {
    fn from(e: CliError) -> Self {
        std::process::ExitCode::from(e.exit_code())
    }
}

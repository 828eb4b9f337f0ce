//! Run configuration: a JSON document whose every block has defaults, so an
//! empty `{"schema_version": 1}` reproduces the measured-sample setup.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use polariton_cmt::critical::{EnergyWindow, Rate, SweepAxis};
use polariton_cmt::fit::{FitParam, Observable};
use polariton_cmt::{Background, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "measured_sample")]
    pub model: ModelParams,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep_phase: SweepPhaseSpec,
    #[serde(default)]
    pub joint: JointSpec,
    #[serde(default)]
    pub phase_diagram: PhaseDiagramSpec,
    #[serde(default)]
    pub cpa: CpaSpec,
    #[serde(default)]
    pub oracle_check: OracleCheckSpec,
    #[serde(default)]
    pub synth: SynthSpec,
    #[serde(default)]
    pub fit: FitSpec,
}

fn measured_sample() -> ModelParams {
    ModelParams::MEASURED_SAMPLE
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: measured_sample(),
            background: Background::default(),
            grid: GridSpec::default(),
            output: OutputSpec::default(),
            sweep_phase: SweepPhaseSpec::default(),
            joint: JointSpec::default(),
            phase_diagram: PhaseDiagramSpec::default(),
            cpa: CpaSpec::default(),
            oracle_check: OracleCheckSpec::default(),
            synth: SynthSpec::default(),
            fit: FitSpec::default(),
        }
    }
}

/// Uniform energy grid in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: 105.0,
            max: 145.0,
            n: 801,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPhaseSpec {
    /// Drive energy; defaults to ω0.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_phases")]
    pub n_phases: usize,
}

fn default_phases() -> usize {
    64
}

impl Default for SweepPhaseSpec {
    fn default() -> Self {
        Self {
            omega: None,
            n_phases: default_phases(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    /// Phases per energy in the synthetic sweep used for the fitted Δψ.
    #[serde(default = "default_phases")]
    pub n_phases: usize,
}

impl Default for JointSpec {
    fn default() -> Self {
        Self {
            n_phases: default_phases(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramSpec {
    pub x: SweepAxis,
    pub y: SweepAxis,
}

impl Default for PhaseDiagramSpec {
    fn default() -> Self {
        let axis = |rate| SweepAxis {
            rate,
            min: 0.5,
            max: 10.0,
            n: 39,
        };
        Self {
            x: axis(Rate::GammaR),
            y: axis(Rate::GammaM),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpaSpec {
    /// Search window; defaults to the grid range.
    #[serde(default)]
    pub window: Option<EnergyWindow>,
    #[serde(default = "default_cpa_tol")]
    pub tol: f64,
}

fn default_cpa_tol() -> f64 {
    1e-10
}

impl Default for CpaSpec {
    fn default() -> Self {
        Self {
            window: None,
            tol: default_cpa_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckSpec {
    /// Energies sampled uniformly across the grid range.
    #[serde(default = "default_oracle_omegas")]
    pub n_omega: usize,
    #[serde(default = "default_oracle_phases")]
    pub n_phases: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
}

fn default_oracle_omegas() -> usize {
    9
}

fn default_oracle_phases() -> usize {
    4
}

impl Default for OracleCheckSpec {
    fn default() -> Self {
        Self {
            n_omega: default_oracle_omegas(),
            n_phases: default_oracle_phases(),
            dt: None,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<Observable>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_kinds() -> Vec<Observable> {
    vec![Observable::R1, Observable::R2, Observable::T]
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    /// Dataset written by `synth` (or any file in the same layout).
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default = "default_free")]
    pub free: Vec<FitParam>,
    /// Starting point; defaults to `model`.
    #[serde(default)]
    pub init: Option<ModelParams>,
}

fn default_free() -> Vec<FitParam> {
    vec![FitParam::Omega0, FitParam::GammaR, FitParam::GammaM, FitParam::OmegaRabi]
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            data: None,
            free: default_free(),
            init: None,
        }
    }
}

/// Parses a config document, reporting the full path of any offending key.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<root>".to_string() } else { key };
        CliError::config(key, e.into_inner().to_string())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        ));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn lib_check(block: &str, r: polariton_cmt::Result<()>) -> CliResult<()> {
    r.map_err(|e| CliError::from_lib(block, e))
}

fn need(ok: bool, key: &str, message: impl Into<String>) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, message))
    }
}

impl RunConfig {
    pub fn validate_common(&self) -> CliResult<()> {
        lib_check("model", self.model.validate())?;
        lib_check("background", self.background.validate())?;
        let g = &self.grid;
        need(g.min.is_finite(), "grid.min", "must be finite")?;
        need(g.max.is_finite() && g.max > g.min, "grid.max", "must be finite and above grid.min")?;
        need(g.n >= 2, "grid.n", format!("needs at least 2 points, got {}", g.n))
    }

    pub fn validate_sweep_phase(&self) -> CliResult<()> {
        let s = &self.sweep_phase;
        need(s.omega.is_none_or(f64::is_finite), "sweep_phase.omega", "must be finite")?;
        need(s.n_phases >= 3, "sweep_phase.n_phases", "needs at least 3 phases")
    }

    pub fn validate_joint(&self) -> CliResult<()> {
        need(self.joint.n_phases >= 3, "joint.n_phases", "needs at least 3 phases")
    }

    pub fn validate_phase_diagram(&self) -> CliResult<()> {
        for (key, a) in [("phase_diagram.x", &self.phase_diagram.x), ("phase_diagram.y", &self.phase_diagram.y)] {
            need(a.min > 0.0 && a.min.is_finite(), &format!("{key}.min"), "must be positive")?;
            need(
                a.max.is_finite() && (a.max > a.min || (a.n == 1 && a.max == a.min)),
                &format!("{key}.max"),
                "must exceed min (equal only when n = 1)",
            )?;
            need(a.n >= 1, &format!("{key}.n"), "needs at least 1 point")?;
        }
        need(
            self.phase_diagram.x.rate != self.phase_diagram.y.rate,
            "phase_diagram.y.rate",
            "must differ from phase_diagram.x.rate",
        )
    }

    pub fn cpa_window(&self) -> EnergyWindow {
        self.cpa.window.unwrap_or(EnergyWindow {
            min: self.grid.min,
            max: self.grid.max,
        })
    }

    pub fn validate_cpa(&self) -> CliResult<()> {
        lib_check("cpa", self.cpa_window().validate())?;
        need(self.cpa.tol > 0.0 && self.cpa.tol.is_finite(), "cpa.tol", "must be positive")
    }

    pub fn validate_oracle_check(&self) -> CliResult<()> {
        let o = &self.oracle_check;
        need(o.n_omega >= 1, "oracle_check.n_omega", "needs at least 1 energy")?;
        need(o.n_phases >= 1, "oracle_check.n_phases", "needs at least 1 phase")?;
        need(o.dt.is_none_or(|v| v > 0.0), "oracle_check.dt", "must be positive")?;
        need(o.t_end.is_none_or(|v| v > 0.0), "oracle_check.t_end", "must be positive")
    }

    pub fn validate_synth(&self) -> CliResult<()> {
        let s = &self.synth;
        need(!s.kinds.is_empty(), "synth.kinds", "needs at least one observable")?;
        need(
            s.noise_sigma >= 0.0 && s.noise_sigma.is_finite(),
            "synth.noise_sigma",
            "must be non-negative",
        )
    }

    pub fn fit_init(&self) -> ModelParams {
        self.fit.init.unwrap_or(self.model)
    }

    pub fn validate_fit(&self) -> CliResult<()> {
        need(self.fit.data.is_some(), "fit.data", "a dataset path is required")?;
        need(!self.fit.free.is_empty(), "fit.free", "needs at least one free parameter")?;
        lib_check("fit.init", self.fit_init().validate())
    }
}

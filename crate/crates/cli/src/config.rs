//! JSON run and sweep configurations.
//!
//! Every document carries `schema_version`; unknown keys are rejected at every
//! level so a typo cannot silently fall back to a default.

use std::path::{Path, PathBuf};

use lattice_flow::potentials::PotentialSpec;
use lattice_flow::{Exponent, LatticeSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Dnls,
    Dkg,
    LinearSchrodinger,
    LinearKg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "zero_potential")]
    pub potential: PotentialSpec,
}

fn zero_potential() -> PotentialSpec {
    PotentialSpec::Zero
}

/// Initial data. For `dkg` the real part is `u(0)` and the imaginary part is
/// `∂_t u(0)`; `delta` and `gaussian` start at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Delta { amplitude: f64 },
    Gaussian { width: f64, amplitude: f64 },
    Random { seed: u64, amplitude: f64 },
    File { path: PathBuf },
    NegativeEnergySeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Integrator {
    Strang {
        tau: f64,
    },
    Picard {
        tau: f64,
        #[serde(default = "default_picard_tol")]
        tol: f64,
        #[serde(default = "default_picard_iter")]
        max_iter: usize,
    },
    Verlet {
        tau: f64,
        /// Halve the step when `‖u‖_∞` doubles (blow-up runs).
        #[serde(default)]
        adaptive: bool,
    },
    /// Exact diagonal flow sampled at the cadence.
    Spectral,
    /// Duhamel fixed point for the linear Klein-Gordon system with potential.
    Duhamel {
        tau: f64,
    },
}

fn default_picard_tol() -> f64 {
    1e-13
}

fn default_picard_iter() -> usize {
    100
}

impl Integrator {
    pub fn name(&self) -> &'static str {
        match self {
            Integrator::Strang { .. } => "strang",
            Integrator::Picard { .. } => "picard",
            Integrator::Verlet { .. } => "verlet",
            Integrator::Spectral => "spectral",
            Integrator::Duhamel { .. } => "duhamel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    #[serde(default = "Exponent::standard_grid")]
    pub p_list: Vec<Exponent>,
    /// Time between samples.
    pub cadence: f64,
    /// Tolerance of the one-sided bound checks.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Blow-up slack on `T_pred`.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Track the linear/nonlinear split and its modified energy (defocusing `dkg`).
    #[serde(default)]
    pub decomposition: bool,
    /// Run the defocusing control to `5 T_pred` after a blow-up run.
    #[serde(default = "yes")]
    pub control_run: bool,
    /// Step of the defocusing control run; defaults to `h/10`.
    #[serde(default)]
    pub control_tau: Option<f64>,
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_slack() -> f64 {
    0.1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Directory for artifacts; `--out` overrides it.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: Model,
    pub lattice: LatticeSpec,
    #[serde(default = "default_params")]
    pub params: ModelParams,
    pub initial: InitialData,
    pub integrator: Integrator,
    pub horizon: f64,
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub output: Output,
}

fn default_params() -> ModelParams {
    ModelParams {
        sigma: 0.0,
        lambda: 0.0,
        potential: PotentialSpec::Zero,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFlow {
    Schrodinger,
    Kg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Uniform { start: f64, stop: f64, count: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Uniform { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count)
                    .map(|k| start + (stop - start) * k as f64 / (*count - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSweepConfig {
    pub schema_version: u32,
    pub flows: Vec<SweepFlow>,
    pub dims: Vec<usize>,
    /// Sites per axis, one entry per dimension in `dims`.
    pub n: Vec<usize>,
    pub h_list: Vec<f64>,
    #[serde(default = "Exponent::standard_grid")]
    pub p_list: Vec<Exponent>,
    pub t_grid: TimeGrid,
    pub trials: usize,
    pub seed: u64,
    /// Exponents `α` for the `(1 - Δ_h)^α` check; empty skips it.
    #[serde(default)]
    pub bessel_alphas: Vec<f64>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSweepConfig {
    pub schema_version: u32,
    pub alpha: f64,
    pub dims: Vec<usize>,
    /// Decreasing mesh sizes.
    pub h_list: Vec<f64>,
    /// Physical half-width `L` of the kernel box; `R = ceil(L/h)`. One entry
    /// per dimension in `dims`.
    #[serde(default)]
    pub length: Vec<f64>,
    /// Fixed radius for every `h`, overriding `length`.
    #[serde(default)]
    pub radius: Option<usize>,
    /// Quadrature points per axis; defaults to the smallest admissible power of two.
    #[serde(default)]
    pub quadrature_points: Option<usize>,
    /// Largest accepted max/min of the normalized sequence.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub export_kernels: bool,
    #[serde(default)]
    pub output: Output,
}

fn default_spread() -> f64 {
    5.0
}

pub const DEFAULT_KERNEL_LENGTH: f64 = 8.0;

fn check_version(found: u32) -> Result<(), CliError> {
    if found != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {found}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must be positive, got {x}")))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural and compatibility checks that do not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        positive(self.horizon, "horizon")?;
        positive(self.diagnostics.cadence, "cadence")?;
        if let Some(tau) = self.diagnostics.control_tau {
            positive(tau, "control_tau")?;
        }
        if self.diagnostics.p_list.is_empty() {
            return Err(CliError::Config("diagnostics.p_list is empty".into()));
        }
        let integ = self.integrator.name();
        let allowed: &[&str] = match self.model {
            Model::Dnls => &["strang", "picard"],
            Model::Dkg => &["verlet"],
            Model::LinearSchrodinger => &["spectral"],
            Model::LinearKg => &["spectral", "duhamel"],
        };
        if !allowed.contains(&integ) {
            return Err(CliError::Config(format!(
                "integrator {integ} is not compatible with model {:?} (allowed: {})",
                self.model,
                allowed.join(", ")
            )));
        }
        match &self.integrator {
            Integrator::Strang { tau }
            | Integrator::Picard { tau, .. }
            | Integrator::Verlet { tau, .. }
            | Integrator::Duhamel { tau } => positive(*tau, "integrator.tau")?,
            Integrator::Spectral => {}
        }
        let p = &self.params;
        match self.model {
            Model::Dnls | Model::Dkg => {
                positive(p.sigma, "params.sigma")?;
                if p.lambda != 1.0 && p.lambda != -1.0 {
                    return Err(CliError::Config(format!("params.lambda must be ±1, got {}", p.lambda)));
                }
            }
            Model::LinearSchrodinger | Model::LinearKg => {
                if p.lambda != 0.0 {
                    return Err(CliError::Config("linear models take no nonlinearity (lambda must be 0)".into()));
                }
            }
        }
        if self.model == Model::LinearSchrodinger && p.potential != PotentialSpec::Zero {
            return Err(CliError::Config("linear_schrodinger runs the free flow; potential must be zero".into()));
        }
        if self.model == Model::LinearKg
            && self.integrator == Integrator::Spectral
            && !matches!(p.potential, PotentialSpec::Zero)
            && p.potential != (PotentialSpec::Constant { value: 1.0 })
        {
            return Err(CliError::Config(
                "the spectral linear_kg flow is the free flow (V ≡ 1 or zero); use duhamel for other potentials".into(),
            ));
        }
        if self.initial == InitialData::NegativeEnergySeed && !(self.model == Model::Dkg && p.lambda == -1.0) {
            return Err(CliError::Config("negative_energy_seed needs model dkg with lambda = -1".into()));
        }
        if let InitialData::Gaussian { width, .. } = self.initial {
            positive(width, "initial.width")?;
        }
        Ok(())
    }
}

impl GrowthSweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.flows.is_empty() || self.dims.is_empty() || self.h_list.is_empty() || self.p_list.is_empty() {
            return Err(CliError::Config("growth sweep lists must be nonempty".into()));
        }
        if self.n.len() != self.dims.len() {
            return Err(CliError::Config("growth sweep needs one n per dimension".into()));
        }
        if self.t_grid.points().is_empty() {
            return Err(CliError::Config("growth sweep t_grid is empty".into()));
        }
        for &h in &self.h_list {
            positive(h, "h")?;
        }
        Ok(())
    }
}

impl KernelSweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(CliError::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.dims.is_empty() || self.h_list.is_empty() {
            return Err(CliError::Config("kernel sweep lists must be nonempty".into()));
        }
        if !self.length.is_empty() && self.length.len() != self.dims.len() {
            return Err(CliError::Config("kernel sweep needs one length per dimension".into()));
        }
        for &h in &self.h_list {
            positive(h, "h")?;
        }
        if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::Config("h_list must be strictly decreasing".into()));
        }
        Ok(())
    }

    pub fn length_for(&self, dim_index: usize) -> f64 {
        self.length.get(dim_index).copied().unwrap_or(DEFAULT_KERNEL_LENGTH)
    }
}

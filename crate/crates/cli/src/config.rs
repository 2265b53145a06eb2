//! JSON run configuration. Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};

use dispersal_core::analysis::SweepMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epidemic: Option<EpidemicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Node counts for refinement studies (integrability diagnostic).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinement: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub l: usize,
    pub l1: usize,
    pub d: Vec<f64>,
    pub kernels: Vec<String>,
    pub coefficients: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_refine")]
    pub refine_budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default = "default_r0_tol")]
    pub r0_tol: f64,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    100_000
}
fn default_refine() -> usize {
    100
}
fn default_r0_tol() -> f64 {
    dispersal_core::epidemic::R0_TOL
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            refine_budget: default_refine(),
            gap_tol: None,
            r0_tol: default_r0_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SweepMode>,
    pub t_schedule: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicConfig {
    pub kernel: String,
    /// Viral diffusion rates; one report per entry.
    pub d: Vec<f64>,
    pub r: String,
    pub m: String,
    pub b: String,
    pub beta_d: String,
    pub beta_i: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Sub-interval searched for the peak; defaults to the whole domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<(f64, f64)>,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Point at which the generalized eigenvalue residual is evaluated;
    /// defaults to the spectral bound when a gap certificate exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

fn default_window() -> usize {
    dispersal_core::analysis::DEFAULT_FIT_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub deltas: Vec<f64>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_shift: Option<f64>,
}

fn default_draws() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl RunConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn formats(&self) -> Vec<Format> {
        self.output
            .as_ref()
            .map_or_else(default_formats, |o| o.formats.clone())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats().contains(&f)
    }
}

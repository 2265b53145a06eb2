//! JSON report schema.
//!
//! Every run writes `<out>/<command>.json` holding a [`RunReport`]. Sections
//! not produced by the command are omitted. `timings` is wall-clock data and
//! is the only field that differs between repeated runs.

use std::collections::BTreeMap;

use serde::Serialize;

use dispersal_core::analysis::{IntegrabilityReport, ProbeMode, ProbeResult};
use dispersal_core::epidemic::R0Report;
use dispersal_core::model::ValidationReport;
use dispersal_core::opspec::SpectralReport;
use dispersal_core::reduce::ReducedQuantities;
use dispersal_core::analysis::SweepTable;

use crate::config::RunConfig;

/// Decimal with 17 significant digits.
pub fn csv_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub artifact_version: &'static str,
    pub command: String,
    pub exit_code: i32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectralReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedQuantities>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub r0: Vec<R0Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeReport>,
    pub errors: Vec<ErrorEntry>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            exit_code: 0,
            seed: 0,
            grid_n: None,
            config: None,
            validation: None,
            spectrum: None,
            reduced: None,
            sweep: None,
            diagnose: None,
            r0: Vec::new(),
            oracle: None,
            probe: None,
            errors: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub(crate) fn exit_code(&self) -> i32 {
        self.errors.iter().map(|e| e.exit_code).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub eta: f64,
    pub max_small_h: f64,
    pub integrability: IntegrabilityReport,
    pub lambda: Option<f64>,
    /// `lambda` is a certified principal eigenvalue.
    pub lambda_certified: bool,
    pub generalized_residual: Option<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub size: usize,
    pub eigenvalues: usize,
    pub max_real_part: f64,
    pub spectral_bound: f64,
    pub converged: bool,
    pub difference: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub delta: f64,
    pub draw: usize,
    pub seed: u64,
    pub ds: f64,
    pub bound: f64,
    pub norm_dm: f64,
    pub norm_dk: f64,
    pub within_bound: bool,
}

impl ProbeRow {
    pub fn from_result(delta: f64, draw: usize, r: &ProbeResult) -> Self {
        Self {
            delta,
            draw,
            seed: r.seed,
            ds: r.ds,
            bound: r.bound,
            norm_dm: r.norm_dm,
            norm_dk: r.norm_dk,
            within_bound: r.ds.abs() <= r.bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    pub delta: f64,
    pub median_abs_ds: f64,
    pub all_within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub summary: Vec<ProbeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal_shift: Option<ShiftCheck>,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftCheck {
    pub shift: f64,
    pub ds: f64,
    pub error: f64,
}

impl ProbeReport {
    pub fn new(rows: Vec<ProbeRow>, shift: Option<ProbeResult>, tol: f64) -> Self {
        let mut deltas: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        deltas.dedup();
        let summary = deltas
            .into_iter()
            .map(|delta| {
                let group: Vec<&ProbeRow> = rows.iter().filter(|r| r.delta == delta).collect();
                let mut abs: Vec<f64> = group.iter().map(|r| r.ds.abs()).collect();
                ProbeSummary {
                    delta,
                    median_abs_ds: median(&mut abs),
                    all_within_bound: group.iter().all(|r| r.within_bound),
                }
            })
            .collect();
        let diagonal_shift = shift.and_then(|r| match r.mode {
            ProbeMode::DiagonalShift { shift } => Some(ShiftCheck {
                shift,
                ds: r.ds,
                error: (r.ds - shift).abs(),
            }),
            ProbeMode::Random { .. } => None,
        });
        Self {
            rows,
            summary,
            diagonal_shift,
            tol,
        }
    }
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

//! Spectral quantities of the assembled operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{AssembledOperator, PointwiseA};
use crate::dense;
use crate::error::{Error, Result};
use crate::linalg::DMat;
use crate::matspec::spectral_bound_of;
use crate::perron::{perron, positivity_shift, PerronOptions};

pub const DENSE_CAP: usize = 600;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub value: f64,
    pub converged: bool,
    pub direction_converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
    /// Iterate normalized to unit maximum.
    #[serde(skip)]
    pub vector: Vec<f64>,
}

impl BoundEstimate {
    pub fn eigvec(&self) -> Option<&[f64]> {
        self.direction_converged.then_some(self.vector.as_slice())
    }
}

/// Rightmost eigenvalue of a Metzler matrix.
pub fn spectral_bound_matrix(m: &DMat, opts: &PerronOptions) -> BoundEstimate {
    let out = perron(m, opts);
    BoundEstimate {
        value: out.value,
        converged: out.converged,
        direction_converged: out.converged && out.direction_converged,
        iterations: out.iterations,
        residual: out.residual,
        tol: opts.tol,
        vector: out.vector,
    }
}

pub fn spectral_bound(op: &AssembledOperator, opts: &PerronOptions) -> BoundEstimate {
    spectral_bound_matrix(&op.matrix, opts)
}

/// Largest pointwise spectral bound.
pub fn essential_bound(pa: &PointwiseA, tol: f64) -> Result<f64> {
    pa.matrices
        .iter()
        .map(|m| spectral_bound_of(m, tol))
        .try_fold(f64::NEG_INFINITY, |acc, s| s.map(|s| acc.max(s)))
}

pub fn default_gap_tol(s: f64) -> f64 {
    1e-6 * s.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Certificate {
    Exists {
        lambda: f64,
        /// Eigenvector normalized to unit maximum.
        eigvec: Vec<f64>,
        min_component: f64,
        residual: f64,
    },
    NoCertificate {
        reason: String,
    },
}

impl Certificate {
    pub fn exists(&self) -> bool {
        matches!(self, Certificate::Exists { .. })
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Certificate::Exists { lambda, .. } => Some(*lambda),
            Certificate::NoCertificate { .. } => None,
        }
    }
}

/// Certifies a principal eigenpair when the gap `s − s_e` exceeds `gap_tol`.
pub fn principal_certificate(
    matrix: &DMat,
    estimate: &BoundEstimate,
    s_e: f64,
    gap_tol: f64,
) -> Result<Certificate> {
    let gap = estimate.value - s_e;
    if !(gap > gap_tol) {
        return Ok(Certificate::NoCertificate {
            reason: format!("gap below tolerance ({gap:e} <= {gap_tol:e})"),
        });
    }
    let tightened;
    let est = if estimate.direction_converged {
        estimate
    } else {
        tightened = spectral_bound_matrix(matrix, &PerronOptions::with_tol(estimate.tol.min(1e-12)));
        &tightened
    };
    if !est.direction_converged {
        return Ok(Certificate::NoCertificate {
            reason: format!(
                "eigenvector iteration did not settle (residual {:e})",
                est.residual
            ),
        });
    }
    let u = &est.vector;
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pu = matrix.mul_vec(u);
    let residual = pu
        .iter()
        .zip(u)
        .map(|(a, b)| (a - est.value * b).abs())
        .fold(0.0, f64::max)
        / umax;
    let min_component = u.iter().fold(f64::INFINITY, |m, &v| m.min(v)) / umax;
    if !(min_component > 0.0) {
        return Err(Error::Inconsistency(format!(
            "gap {gap:e} is positive but the converged eigenvector has minimum component {min_component:e}"
        )));
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::Inconsistency(format!(
            "eigen-residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(Certificate::Exists {
        lambda: est.value,
        eigvec: u.iter().map(|v| v / umax).collect(),
        min_component,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub s: f64,
    pub s_e: f64,
    pub gap: f64,
    pub gap_tol: f64,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub certificate: Certificate,
}

pub fn spectral_report(
    op: &AssembledOperator,
    pa: &PointwiseA,
    opts: &PerronOptions,
    gap_tol: Option<f64>,
) -> Result<SpectralReport> {
    let est = spectral_bound(op, opts);
    let s_e = essential_bound(pa, opts.tol)?;
    let gap_tol = gap_tol.unwrap_or_else(|| default_gap_tol(est.value));
    let certificate = principal_certificate(&op.matrix, &est, s_e, gap_tol)?;
    Ok(SpectralReport {
        s: est.value,
        s_e,
        gap: est.value - s_e,
        gap_tol,
        tol: opts.tol,
        converged: est.converged,
        iterations: est.iterations,
        residual: est.residual,
        certificate,
    })
}

/// Every eigenvalue, sorted by real part descending.
pub fn dense_spectrum(op: &AssembledOperator) -> Result<Vec<Complex64>> {
    dense_spectrum_matrix(&op.matrix)
}

pub fn dense_spectrum_matrix(m: &DMat) -> Result<Vec<Complex64>> {
    if m.rows() > DENSE_CAP {
        return Err(Error::SizeCap {
            size: m.rows(),
            cap: DENSE_CAP,
        });
    }
    dense::eigenvalues(m)
}

pub fn growth_rate(op: &AssembledOperator, horizon: f64) -> f64 {
    growth_rate_from(&op.matrix, horizon, &vec![1.0; op.size()])
}

/// `(ln‖u(T)‖∞ − ln‖u(T/2)‖∞)/(T/2)` for explicit Euler steps of `u' = P u`.
///
/// The step is at most `1/(2c)` (keeps `I + Δt P` nonnegative) and at most
/// `1e-4/‖P‖∞`; the `2^j` steps covering each half horizon are applied as one
/// matrix power formed by repeated squaring with log-scale renormalization.
pub fn growth_rate_from(p: &DMat, horizon: f64, u0: &[f64]) -> f64 {
    assert!(horizon > 0.0, "positive horizon");
    let c = positivity_shift(p);
    let dt_max = (0.5 / c).min(1e-4 / p.norm_inf().max(f64::MIN_POSITIVE));
    let half = 0.5 * horizon;
    let j = (half / dt_max).log2().ceil().max(0.0) as u32;
    let dt = half / 2f64.powi(j as i32);

    let mut e = p.map(|v| v * dt);
    e.add_diagonal(1.0);
    let mut log_scale = 0.0;
    for _ in 0..j {
        e = e.matmul(&e);
        let s = e.max_abs();
        e.scale(1.0 / s);
        log_scale = 2.0 * log_scale + s.ln();
    }
    let u_half = e.mul_vec(u0);
    let norm_half = max_abs(&u_half);
    let unit: Vec<f64> = u_half.iter().map(|v| v / norm_half).collect();
    let u_full = e.mul_vec(&unit);
    (log_scale + max_abs(&u_full).ln()) / half
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

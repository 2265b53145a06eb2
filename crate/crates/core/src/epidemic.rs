//! Basic reproduction ratio of the linearized virus / infected-cell model
//! with nonlocal viral dispersal:
//!
//! ```text
//! V' = d (K − χ) V − m V + r I
//! I' = β_i V + β_d I − b I
//! ```
//!
//! split as transmission `F = [[0, 0], [β_i, β_d]]` and transition
//! `B = [[L − m, r], [0, −b]]`.

use serde::{Deserialize, Serialize};

use crate::assembly::{compute_chi, dispersal_block};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::ladder::{self, Ladder};
use crate::linalg::{DMat, Lu};
use crate::matspec::spectral_bound_of;
use crate::model::KernelSpec;
use crate::opspec::spectral_bound_matrix;
use crate::perron::{perron, PerronOptions};
use crate::reduce::{perron_weight, PerronWeight};

pub const R0_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VsiParams {
    pub kernel: KernelSpec,
    pub d: f64,
    pub r: Expr,
    pub m: Expr,
    pub b: Expr,
    pub beta_d: Expr,
    pub beta_i: Expr,
    pub domain: (f64, f64),
}

/// Grid samples of the model coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledVsi {
    pub grid: Grid,
    pub d: f64,
    pub kernel: DMat,
    pub chi: Vec<f64>,
    pub r: Vec<f64>,
    pub m: Vec<f64>,
    pub b: Vec<f64>,
    pub beta_d: Vec<f64>,
    pub beta_i: Vec<f64>,
    /// Notes on inputs accepted outside the strict positivity assumptions.
    pub flags: Vec<String>,
}

impl VsiParams {
    pub fn sample(&self, grid: &Grid) -> Result<SampledVsi> {
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::InvalidParameters(format!(
                "viral diffusion must be finite and nonnegative, got {}",
                self.d
            )));
        }
        if (grid.a(), grid.b()) != self.domain {
            return Err(Error::InvalidDomain(format!(
                "grid covers ({}, {}) but the model lives on ({}, {})",
                grid.a(),
                grid.b(),
                self.domain.0,
                self.domain.1
            )));
        }
        let field = |name: &str, e: &Expr| -> Result<Vec<f64>> {
            grid.points()
                .iter()
                .map(|&x| {
                    e.eval_x(x)
                        .map_err(|err| Error::expr(format!("{name} `{}` at x = {x}", e.source()), err))
                })
                .collect()
        };
        let kernel = self.kernel.sample(grid)?;
        let chi = compute_chi(&kernel, grid);
        let sampled = SampledVsi {
            grid: grid.clone(),
            d: self.d,
            r: field("r", &self.r)?,
            m: field("m", &self.m)?,
            b: field("b", &self.b)?,
            beta_d: field("beta_d", &self.beta_d)?,
            beta_i: field("beta_i", &self.beta_i)?,
            kernel,
            chi,
            flags: Vec::new(),
        };
        sampled.checked()
    }
}

impl SampledVsi {
    fn checked(mut self) -> Result<Self> {
        for (name, v) in [("r", &self.r), ("m", &self.m), ("b", &self.b)] {
            if let Some((a, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
                return Err(Error::InvalidParameters(format!(
                    "{name} must be positive, got {x} at node {a}"
                )));
            }
        }
        for (name, v) in [("beta_d", &self.beta_d), ("beta_i", &self.beta_i)] {
            if let Some((a, x)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
                return Err(Error::InvalidParameters(format!(
                    "{name} must be nonnegative, got {x} at node {a}"
                )));
            }
            if v.iter().any(|x| *x == 0.0) {
                self.flags.push(format!("{name} vanishes somewhere: outside the positivity assumption"));
            }
        }
        if self.kernel.as_slice().iter().any(|&k| k < 0.0) {
            return Err(Error::InvalidParameters("viral kernel takes negative values".into()));
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self { d, ..self.clone() }
    }

    /// `L − diag m` with `L = d (K W − diag χ)`.
    fn viral_block(&self) -> DMat {
        let mut x = dispersal_block(&self.kernel, &self.chi, &self.grid, self.d);
        for (a, m) in self.m.iter().enumerate() {
            x[(a, a)] -= m;
        }
        x
    }

    pub fn hat_r0(&self) -> f64 {
        self.beta_d
            .iter()
            .zip(&self.b)
            .map(|(bd, b)| bd / b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max (β_d/b + β_i r/(b m))`, the vanishing-diffusion limit.
    pub fn r0_small_d(&self) -> f64 {
        (0..self.n())
            .map(|a| self.beta_d[a] / self.b[a] + self.beta_i[a] * self.r[a] / (self.b[a] * self.m[a]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(B, F)`, both `2n × 2n`.
pub fn assemble_epidemic(v: &SampledVsi) -> (DMat, DMat) {
    let n = v.n();
    let x = v.viral_block();
    let mut b = DMat::zeros(2 * n, 2 * n);
    let mut f = DMat::zeros(2 * n, 2 * n);
    for a in 0..n {
        b.row_mut(a)[..n].copy_from_slice(x.row(a));
        b[(a, n + a)] = v.r[a];
        b[(n + a, n + a)] = -v.b[a];
        f[(n + a, a)] = v.beta_i[a];
        f[(n + a, n + a)] = v.beta_d[a];
    }
    (b, f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R0Estimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Spectral radius of `−F B⁻¹`. Its only nonzero block is
/// `G = diag(β_i) (m − L)⁻¹ diag(r/b) + diag(β_d/b)`, formed by one LU of
/// `m − L` (the lower-right block of `B` is diagonal).
pub fn r0(v: &SampledVsi, tol: f64) -> Result<R0Estimate> {
    let n = v.n();
    let x = v.viral_block();
    let s_x = spectral_bound_of(&x, 1e-12)?;
    if !(s_x < 0.0) {
        return Err(Error::InvalidParameters(format!(
            "transition operator is not stable: s(L - m) = {s_x}"
        )));
    }
    let lu = Lu::factor(&x.map(|e| -e))?;
    let mut g = DMat::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for c in 0..n {
        rhs.iter_mut().for_each(|e| *e = 0.0);
        rhs[c] = v.r[c] / v.b[c];
        let col = lu.solve(&rhs);
        for a in 0..n {
            g[(a, c)] = v.beta_i[a] * col[a].max(0.0);
        }
    }
    for a in 0..n {
        g[(a, a)] += v.beta_d[a] / v.b[a];
    }
    let out = perron(&g, &PerronOptions::with_tol(tol));
    if !out.converged {
        return Err(Error::NotConverged {
            what: "basic reproduction ratio",
            iterations: out.iterations,
            estimate: out.value,
            residual: out.residual,
        });
    }
    Ok(R0Estimate {
        value: out.value,
        converged: out.converged,
        iterations: out.iterations,
        residual: out.residual,
    })
}

/// `s(B + F/μ)`.
pub fn h_mu(v: &SampledVsi, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameters(format!("need mu > 0, got {mu}")));
    }
    let (mut b, f) = assemble_epidemic(v);
    for (x, y) in b.as_mut_slice().iter_mut().zip(f.as_slice()) {
        *x += y / mu;
    }
    let est = spectral_bound_matrix(&b, &PerronOptions::default());
    if !est.converged {
        return Err(Error::NotConverged {
            what: "H(mu)",
            iterations: est.iterations,
            estimate: est.value,
            residual: est.residual,
        });
    }
    Ok(est.value)
}

/// `Σ_a [−m + r β_i/(μ b − β_d)] p w`, defined for `μ > R̂₀`.
pub fn q_of_mu(v: &SampledVsi, weight: &PerronWeight, mu: f64) -> Result<f64> {
    let hat = v.hat_r0();
    if !(mu > hat) {
        return Err(Error::ResolventDomain { gamma: mu, bound: hat });
    }
    let w = v.grid.weights();
    Ok((0..v.n())
        .map(|a| {
            let term = -v.m[a] + v.r[a] * v.beta_i[a] / (mu * v.b[a] - v.beta_d[a]);
            term * weight.samples[a] * w[a]
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum LimitClass {
    /// Large-diffusion limit is the root of `Q`.
    RootCase { tilde_r0: f64, q_residual: f64 },
    /// Large-diffusion limit is `R̂₀`.
    BoundaryCase { hat_r0: f64 },
}

impl LimitClass {
    pub fn limit(&self) -> f64 {
        match self {
            LimitClass::RootCase { tilde_r0, .. } => *tilde_r0,
            LimitClass::BoundaryCase { hat_r0 } => *hat_r0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub hat_r0: f64,
    pub r0_small_d: f64,
    pub class: LimitClass,
    pub ladder: Ladder,
}

pub fn r0_large_d_limit(v: &SampledVsi, weight: &PerronWeight) -> Result<LimitReport> {
    let hat = v.hat_r0();
    let ladder = ladder::evaluate(hat, 0.0, ladder::default_margin(0.0), |mu| q_of_mu(v, weight, mu))?;
    let class = if ladder.above {
        let root = ladder::bisect_decreasing(hat, ladder::BISECTION_TOL, |mu| q_of_mu(v, weight, mu))?;
        LimitClass::RootCase {
            tilde_r0: root.value,
            q_residual: q_of_mu(v, weight, root.value)?,
        }
    } else {
        LimitClass::BoundaryCase { hat_r0: hat }
    };
    Ok(LimitReport {
        hat_r0: hat,
        r0_small_d: v.r0_small_d(),
        class,
        ladder,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R0Report {
    pub d: f64,
    pub r0: R0Estimate,
    pub tol: f64,
    pub h_at_r0: f64,
    pub hat_r0: f64,
    pub tilde_r0: Option<f64>,
    pub r0_small_d: f64,
    pub limit: LimitClass,
    pub q_samples: Vec<(f64, f64)>,
    pub flags: Vec<String>,
}

pub fn r0_report(v: &SampledVsi, tol: f64) -> Result<R0Report> {
    let estimate = r0(v, tol)?;
    let weight = perron_weight(&v.kernel, &v.grid, 1e-12)?;
    let limit = r0_large_d_limit(v, &weight)?;
    let hat = limit.hat_r0;
    let mut q_samples: Vec<(f64, f64)> = limit.ladder.samples.iter().map(|s| (s.at, s.value)).collect();
    for k in 0..8 {
        let mu = hat + 0.25 * 2f64.powi(k) * hat.abs().max(1.0);
        q_samples.push((mu, q_of_mu(v, &weight, mu)?));
    }
    q_samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tilde_r0 = match limit.class {
        LimitClass::RootCase { tilde_r0, .. } => Some(tilde_r0),
        LimitClass::BoundaryCase { .. } => None,
    };
    Ok(R0Report {
        d: v.d,
        h_at_r0: h_mu(v, estimate.value)?,
        r0: estimate,
        tol,
        hat_r0: hat,
        tilde_r0,
        r0_small_d: limit.r0_small_d,
        limit: limit.class,
        q_samples,
        flags: v.flags.clone(),
    })
}

pub fn q_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("mu,q\n");
    for (mu, q) in samples {
        out.push_str(&format!("{mu:.16e},{q:.16e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: f64, coef: [&str; 5], kernel: &str) -> VsiParams {
        let e = |s: &str| Expr::parse(s).unwrap();
        VsiParams {
            kernel: KernelSpec::parse(kernel).unwrap(),
            d,
            r: e(coef[0]),
            m: e(coef[1]),
            b: e(coef[2]),
            beta_d: e(coef[3]),
            beta_i: e(coef[4]),
            domain: (-1.0, 1.0),
        }
    }

    fn sampled(d: f64, coef: [&str; 5], n: usize) -> SampledVsi {
        let p = params(d, coef, "exp(-(x-y)^2)");
        p.sample(&Grid::new(-1.0, 1.0, n).unwrap()).unwrap()
    }

    const BASE: [&str; 5] = ["1", "1", "1", "0.5", "1"];

    #[test]
    fn single_node_blocks() {
        let v = params(0.0, BASE, "1").sample(&Grid::new(-1.0, 1.0, 1).unwrap()).unwrap();
        let (b, f) = assemble_epidemic(&v);
        assert_eq!(b, DMat::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]));
        assert_eq!(f, DMat::from_rows(&[[0.0, 0.0], [1.0, 0.5]]));
    }

    #[test]
    fn transition_matrix_is_block_upper_triangular_and_stable() {
        let v = sampled(2.0, ["1 + x^2", "1", "0.5 + x^2", "0.2", "1"], 30);
        let (b, _) = assemble_epidemic(&v);
        for a in 0..30 {
            for c in 0..30 {
                assert_eq!(b[(30 + a, c)], 0.0);
            }
        }
        assert!(spectral_bound_of(&b, 1e-12).unwrap() < 0.0);
    }

    #[test]
    fn constant_coefficients() {
        for d in [0.0, 1.0, 100.0] {
            let v = sampled(d, BASE, 40);
            let r = r0(&v, R0_TOL).unwrap();
            assert!((r.value - 1.5).abs() < 1e-9, "d = {d}: {}", r.value);
            assert!(h_mu(&v, r.value).unwrap().abs() < 1e-8);
        }
        let v = sampled(1.0, BASE, 40);
        assert!(h_mu(&v, 3.0).unwrap() < 0.0);
        assert!(h_mu(&v, 1.0).unwrap() > 0.0);
        let w = perron_weight(&v.kernel, &v.grid, 1e-12).unwrap();
        assert!((q_of_mu(&v, &w, 1.5).unwrap()).abs() < 1e-12);
        let lim = r0_large_d_limit(&v, &w).unwrap();
        match lim.class {
            LimitClass::RootCase { tilde_r0, .. } => assert!((tilde_r0 - 1.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!((lim.r0_small_d - 1.5).abs() < 1e-15);
        assert!(q_of_mu(&v, &w, 0.5).is_err());
    }

    #[test]
    fn no_cell_free_route() {
        let v = sampled(1.0, ["1", "1", "1 + 0.5*x^2", "0.5", "0"], 30);
        assert!(!v.flags.is_empty());
        let r = r0(&v, R0_TOL).unwrap();
        assert!((r.value - v.hat_r0()).abs() < 1e-10);
    }

    #[test]
    fn transmission_monotonicity() {
        let lo = r0(&sampled(1.0, ["1", "1 + x^2", "1", "0.3", "0.5"], 30), R0_TOL).unwrap();
        let hi = r0(&sampled(1.0, ["1", "1 + x^2", "1", "0.3", "0.5 + 0.2*abs(x)"], 30), R0_TOL).unwrap();
        assert!(hi.value >= lo.value);
    }

    #[test]
    fn heavy_clearance_is_negative_at_the_boundary() {
        let v = sampled(1.0, ["1", "100", "1", "0.5", "1"], 30);
        let w = perron_weight(&v.kernel, &v.grid, 1e-12).unwrap();
        assert!(q_of_mu(&v, &w, 0.5 + 0.1).unwrap() < 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let p = params(1.0, ["1", "0", "1", "0.5", "1"], "1");
        assert!(p.sample(&Grid::new(-1.0, 1.0, 5).unwrap()).is_err());
    }
}

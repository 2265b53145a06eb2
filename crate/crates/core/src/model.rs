//! Continuum problem description and hypothesis checks on grid samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::linalg::DMat;

/// Entries at or below this magnitude count as zero in sign and pattern tests.
pub const TOL_ZERO: f64 = 1e-13;

/// Dispersal kernel `k(x, y)`; the first argument is the arrival point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    expr: Expr,
}

impl KernelSpec {
    pub fn new(expr: Expr) -> Self {
        Self { expr }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Expr::parse(text)
            .map(Self::new)
            .map_err(|e| Error::expr(format!("kernel `{text}`"), e))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.expr
            .eval_xy(x, y)
            .map_err(|e| Error::expr(format!("kernel `{}` at ({x}, {y})", self.expr.source()), e))
    }

    /// `K[a][b] = k(x_a, x_b)` without quadrature weights.
    pub fn sample(&self, grid: &Grid) -> Result<DMat> {
        let p = grid.points();
        let n = p.len();
        let mut k = DMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                k[(a, b)] = self.eval(p[a], p[b])?;
            }
        }
        Ok(k)
    }
}

/// Row-major `l × l` field of expressions in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefField {
    l: usize,
    entries: Vec<Expr>,
}

impl CoefField {
    pub fn new(l: usize, entries: Vec<Expr>) -> Result<Self> {
        if l == 0 || entries.len() != l * l {
            return Err(Error::Dimension(format!(
                "coefficient field needs {} entries for l = {l}, got {}",
                l * l,
                entries.len()
            )));
        }
        Ok(Self { l, entries })
    }

    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let l = rows.len();
        let mut entries = Vec::with_capacity(l * l);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != l {
                return Err(Error::Dimension(format!(
                    "coefficient row {i} has {} entries, expected {l}",
                    row.len()
                )));
            }
            for (j, text) in row.iter().enumerate() {
                let text = text.as_ref();
                entries.push(
                    Expr::parse(text)
                        .map_err(|e| Error::expr(format!("coefficient m[{i}][{j}] `{text}`"), e))?,
                );
            }
        }
        Self::new(l, entries)
    }

    pub fn constant(m: &DMat) -> Self {
        assert!(m.is_square());
        let entries = m.as_slice().iter().map(|&v| Expr::constant(v)).collect();
        Self { l: m.rows(), entries }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.l + j]
    }

    pub fn eval(&self, x: f64) -> Result<DMat> {
        let l = self.l;
        let mut m = DMat::zeros(l, l);
        for i in 0..l {
            for j in 0..l {
                let e = self.entry(i, j);
                m[(i, j)] = e
                    .eval_x(x)
                    .map_err(|err| Error::expr(format!("m[{i}][{j}] `{}` at x = {x}", e.source()), err))?;
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersalSystem {
    l1: usize,
    d: Vec<f64>,
    kernels: Vec<KernelSpec>,
    coefficients: CoefField,
    domain: (f64, f64),
}

impl DispersalSystem {
    /// Species `0..l1` disperse with `kernels`; the rest are sedentary.
    pub fn new(
        l1: usize,
        d: Vec<f64>,
        kernels: Vec<KernelSpec>,
        coefficients: CoefField,
        domain: (f64, f64),
    ) -> Result<Self> {
        let l = coefficients.l();
        if l1 == 0 || l1 > l {
            return Err(Error::Dimension(format!("need 1 <= l1 <= l = {l}, got l1 = {l1}")));
        }
        if d.len() != l {
            return Err(Error::Dimension(format!(
                "diffusion vector has {} entries, expected {l}",
                d.len()
            )));
        }
        if kernels.len() != l1 {
            return Err(Error::Dimension(format!(
                "{} kernels given for {l1} dispersing species",
                kernels.len()
            )));
        }
        if let Some(v) = d.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameters(format!(
                "diffusion rates must be finite and nonnegative, got {v}"
            )));
        }
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
            return Err(Error::InvalidDomain(format!(
                "need finite a < b, got ({}, {})",
                domain.0, domain.1
            )));
        }
        Ok(Self {
            l1,
            d,
            kernels,
            coefficients,
            domain,
        })
    }

    pub fn l(&self) -> usize {
        self.coefficients.l()
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn kernels(&self) -> &[KernelSpec] {
        &self.kernels
    }

    pub fn coefficients(&self) -> &CoefField {
        &self.coefficients
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.domain.0, self.domain.1, n)
    }

    pub fn with_d(&self, d: Vec<f64>) -> Result<Self> {
        Self::new(
            self.l1,
            d,
            self.kernels.clone(),
            self.coefficients.clone(),
            self.domain,
        )
    }

    pub fn sample(&self, grid: &Grid) -> Result<SampledSystem> {
        if (grid.a(), grid.b()) != self.domain {
            return Err(Error::InvalidDomain(format!(
                "grid covers ({}, {}) but the system lives on ({}, {})",
                grid.a(),
                grid.b(),
                self.domain.0,
                self.domain.1
            )));
        }
        let l = self.l();
        let kernels = self
            .kernels
            .iter()
            .map(|k| k.sample(grid))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Vec::with_capacity(grid.n() * l * l);
        for &x in grid.points() {
            m.extend_from_slice(self.coefficients.eval(x)?.as_slice());
        }
        Ok(SampledSystem {
            grid: grid.clone(),
            l,
            l1: self.l1,
            d: self.d.clone(),
            kernels,
            m,
        })
    }
}

/// Grid samples of a system: everything downstream works from these.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSystem {
    pub grid: Grid,
    pub l: usize,
    pub l1: usize,
    pub d: Vec<f64>,
    /// `kernels[i][(a, b)] = k_i(x_a, x_b)` for dispersing species.
    pub kernels: Vec<DMat>,
    /// `m[(a * l + i) * l + j] = m_ij(x_a)`.
    pub m: Vec<f64>,
}

impl SampledSystem {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn m_entry(&self, a: usize, i: usize, j: usize) -> f64 {
        self.m[(a * self.l + i) * self.l + j]
    }

    pub fn m_at(&self, a: usize) -> DMat {
        let ll = self.l * self.l;
        DMat::from_row_slice(self.l, self.l, &self.m[a * ll..(a + 1) * ll])
    }

    pub fn with_d(&self, d: Vec<f64>) -> Result<Self> {
        if d.len() != self.l {
            return Err(Error::Dimension(format!(
                "diffusion vector has {} entries, expected {}",
                d.len(),
                self.l
            )));
        }
        Ok(Self { d, ..self.clone() })
    }

    pub fn mode(&self) -> Mode {
        classify_mode(&self.d, self.l1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NonDegenerate,
    PartiallyDegenerate,
    /// Every diffusion rate is zero.
    NoDispersal,
}

fn classify_mode(d: &[f64], l1: usize) -> Mode {
    if d.iter().all(|&v| v == 0.0) {
        Mode::NoDispersal
    } else if l1 == d.len() {
        Mode::NonDegenerate
    } else {
        Mode::PartiallyDegenerate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    /// Off-diagonal coefficients nonnegative.
    H1Cooperative,
    /// Coefficient pattern strongly connected.
    H2Irreducible,
    /// Kernels positive on the diagonal.
    H3KernelDiagonal,
    /// Dispersing species have positive rates, the others zero.
    H4DiffusionPattern,
    KernelNonnegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Cooperativity {
        point: usize,
        x: f64,
        row: usize,
        col: usize,
        value: f64,
    },
    Irreducibility {
        point: usize,
        x: f64,
        /// Species not reachable from species 0, or unable to reach it.
        disconnected: Vec<usize>,
    },
    KernelDiagonal {
        species: usize,
        point: usize,
        x: f64,
        value: f64,
    },
    KernelNegative {
        species: usize,
        x: f64,
        y: f64,
        value: f64,
    },
    DiffusionPattern {
        species: usize,
        d: f64,
        expected: String,
    },
}

impl Violation {
    pub fn hypothesis(&self) -> Hypothesis {
        match self {
            Violation::Cooperativity { .. } => Hypothesis::H1Cooperative,
            Violation::Irreducibility { .. } => Hypothesis::H2Irreducible,
            Violation::KernelDiagonal { .. } => Hypothesis::H3KernelDiagonal,
            Violation::KernelNegative { .. } => Hypothesis::KernelNonnegative,
            Violation::DiffusionPattern { .. } => Hypothesis::H4DiffusionPattern,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisStatus {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: Mode,
    pub summary: Vec<HypothesisStatus>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed(&self, h: Hypothesis) -> bool {
        self.violations.iter().any(|v| v.hypothesis() == h)
    }
}

pub fn validate(sys: &DispersalSystem, grid: &Grid) -> Result<ValidationReport> {
    Ok(validate_sampled(&sys.sample(grid)?))
}

pub fn validate_sampled(s: &SampledSystem) -> ValidationReport {
    let mut violations = Vec::new();
    let mode = s.mode();
    for (i, &di) in s.d.iter().enumerate() {
        let dispersing = i < s.l1;
        match mode {
            Mode::NoDispersal => {}
            _ if dispersing && di <= 0.0 => violations.push(Violation::DiffusionPattern {
                species: i,
                d: di,
                expected: "positive rate for a dispersing species".into(),
            }),
            _ if !dispersing && di != 0.0 => violations.push(Violation::DiffusionPattern {
                species: i,
                d: di,
                expected: "zero rate for a species without a kernel".into(),
            }),
            _ => {}
        }
    }

    let p = s.grid.points();
    for (a, &x) in p.iter().enumerate() {
        let m = s.m_at(a);
        for i in 0..s.l {
            for j in 0..s.l {
                if i != j && m[(i, j)] < -TOL_ZERO {
                    violations.push(Violation::Cooperativity {
                        point: a,
                        x,
                        row: i,
                        col: j,
                        value: m[(i, j)],
                    });
                }
            }
        }
        let disconnected = disconnected_species(&m, TOL_ZERO);
        if !disconnected.is_empty() {
            violations.push(Violation::Irreducibility {
                point: a,
                x,
                disconnected,
            });
        }
    }

    for (i, k) in s.kernels.iter().enumerate() {
        for (a, &x) in p.iter().enumerate() {
            if k[(a, a)] <= 0.0 {
                violations.push(Violation::KernelDiagonal {
                    species: i,
                    point: a,
                    x,
                    value: k[(a, a)],
                });
            }
        }
        for (a, &x) in p.iter().enumerate() {
            for (b, &y) in p.iter().enumerate() {
                if k[(a, b)] < -TOL_ZERO {
                    violations.push(Violation::KernelNegative {
                        species: i,
                        x,
                        y,
                        value: k[(a, b)],
                    });
                }
            }
        }
    }

    let summary = [
        Hypothesis::H1Cooperative,
        Hypothesis::H2Irreducible,
        Hypothesis::H3KernelDiagonal,
        Hypothesis::H4DiffusionPattern,
        Hypothesis::KernelNonnegative,
    ]
    .into_iter()
    .map(|h| {
        let count = violations.iter().filter(|v| v.hypothesis() == h).count();
        HypothesisStatus {
            hypothesis: h,
            passed: count == 0,
            violations: count,
        }
    })
    .collect();

    ValidationReport {
        mode,
        summary,
        violations,
    }
}

/// Species outside the strongly connected component of species 0 in the
/// graph with an edge `i -> j` whenever `i != j` and `m[i][j] > tol`.
pub fn disconnected_species(m: &DMat, tol: f64) -> Vec<usize> {
    let l = m.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; l];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..l {
                let w = if forward { m[(u, v)] } else { m[(v, u)] };
                if v != u && !seen[v] && w > tol {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..l).filter(|&i| !(fwd[i] && bwd[i])).collect()
}

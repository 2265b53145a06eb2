//! Reduced objects behind the small- and large-diffusion limits: stationary
//! dispersal profiles, the averaged coefficient matrix, pointwise bounds and
//! the threshold of the partially degenerate case.

use serde::{Deserialize, Serialize};

use crate::assembly::compute_chi;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ladder::{self, Ladder};
use crate::linalg::DMat;
use crate::matspec::{perron_bound, schur_reduce, spectral_bound_of, CoopMatrix};
use crate::model::SampledSystem;
use crate::perron::{perron, PerronOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronWeight {
    /// Samples with `Σ p w = 1`.
    pub samples: Vec<f64>,
    pub eigenvalue: f64,
    pub deviation: f64,
    /// `‖Σ_b k(x_a, x_b) w_b p_b − χ_a p_a‖∞`.
    pub residual: f64,
    pub iterations: usize,
    /// Uniform `1/(b − a)` used for a species without a kernel.
    pub uniform_fallback: bool,
}

impl PerronWeight {
    pub fn uniform(grid: &Grid) -> Self {
        Self {
            samples: vec![1.0 / grid.length(); grid.n()],
            eigenvalue: 1.0,
            deviation: 0.0,
            residual: 0.0,
            iterations: 0,
            uniform_fallback: true,
        }
    }
}

/// Positive solution of `Σ_b k(x_a, x_b) w_b p_b = λ χ_a p_a`, where the
/// discrete problem has `λ = 1`; fails when `|λ − 1| > 100 tol`.
pub fn perron_weight(kernel: &DMat, grid: &Grid, tol: f64) -> Result<PerronWeight> {
    let n = grid.n();
    let w = grid.weights();
    let chi = compute_chi(kernel, grid);
    if let Some(a) = chi.iter().position(|&c| !(c > 0.0)) {
        return Err(Error::InvalidParameters(format!(
            "kernel leaves no mass at node {a} (χ = {})",
            chi[a]
        )));
    }
    let normalized = DMat::from_fn(n, n, |a, b| kernel[(a, b)] * w[b] / chi[a]);
    let opts = PerronOptions::with_tol(tol.min(1e-12));
    let out = perron(&normalized, &opts);
    if !out.converged {
        return Err(Error::NotConverged {
            what: "Perron weight",
            iterations: out.iterations,
            estimate: out.value,
            residual: out.residual,
        });
    }
    let deviation = (out.value - 1.0).abs();
    let allowed = 100.0 * tol;
    if deviation > allowed {
        return Err(Error::GridConsistency {
            eigenvalue: out.value,
            allowed,
        });
    }
    let mass: f64 = out.vector.iter().zip(w).map(|(p, w)| p * w).sum();
    let samples: Vec<f64> = out.vector.iter().map(|p| p / mass).collect();
    if let Some(a) = samples.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::Inconsistency(format!(
            "stationary profile is not positive at node {a} ({})",
            samples[a]
        )));
    }
    let kp = {
        let mut v = vec![0.0; n];
        for a in 0..n {
            v[a] = (0..n).map(|b| kernel[(a, b)] * w[b] * samples[b]).sum();
        }
        v
    };
    let residual = kp
        .iter()
        .zip(&chi)
        .zip(&samples)
        .map(|((k, c), p)| (k - c * p).abs())
        .fold(0.0, f64::max);
    Ok(PerronWeight {
        samples,
        eigenvalue: out.value,
        deviation,
        residual,
        iterations: out.iterations,
        uniform_fallback: false,
    })
}

/// One weight per species; species without a kernel get the uniform weight.
pub fn weights_for(s: &SampledSystem, tol: f64) -> Result<Vec<PerronWeight>> {
    (0..s.l)
        .map(|i| match s.kernels.get(i) {
            Some(k) => perron_weight(k, &s.grid, tol),
            None => Ok(PerronWeight::uniform(&s.grid)),
        })
        .collect()
}

/// `m̃_ij = Σ_a m_ij(x_a) p_j(x_a) w_a`.
pub fn tilde_m(s: &SampledSystem, weights: &[PerronWeight]) -> Result<CoopMatrix> {
    let l = s.l;
    let w = s.grid.weights();
    let m = DMat::from_fn(l, l, |i, j| {
        (0..s.n())
            .map(|a| s.m_entry(a, i, j) * weights[j].samples[a] * w[a])
            .sum()
    });
    CoopMatrix::new(m)
}

/// `κ = max_a s(M(x_a))` and `η₂₂ = max_a s(M₂₂(x_a))` (absent when every
/// species disperses).
pub fn kappa_and_eta22(s: &SampledSystem, tol: f64) -> Result<(f64, Option<f64>)> {
    let mut kappa = f64::NEG_INFINITY;
    for a in 0..s.n() {
        kappa = kappa.max(spectral_bound_of(&s.m_at(a), tol)?);
    }
    let eta22 = if s.l1 < s.l {
        Some(pointwise_s22(s, tol)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    Ok((kappa, eta22))
}

fn pointwise_s22(s: &SampledSystem, tol: f64) -> Result<Vec<f64>> {
    let (l1, l2) = (s.l1, s.l - s.l1);
    (0..s.n())
        .map(|a| spectral_bound_of(&s.m_at(a).block(l1, l1, l2, l2), tol))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeB {
    pub matrix: CoopMatrix,
    /// Some node has `γ` within 1e-12 of its `s(M₂₂)` or an ill-conditioned
    /// resolvent solve.
    pub near_singular: bool,
}

/// Evaluates the averaged Schur reduction `γ ↦ B̃_γ` on a fixed system.
#[derive(Debug, Clone)]
pub struct Reducer<'a> {
    system: &'a SampledSystem,
    weights: &'a [PerronWeight],
    s22: Vec<f64>,
    eta22: f64,
    tol: f64,
}

impl<'a> Reducer<'a> {
    pub fn new(system: &'a SampledSystem, weights: &'a [PerronWeight], tol: f64) -> Result<Self> {
        if system.l1 >= system.l {
            return Err(Error::Mode(
                "the reduced family needs at least one non-dispersing species".into(),
            ));
        }
        if weights.len() < system.l1 {
            return Err(Error::Dimension(format!(
                "{} weights for {} dispersing species",
                weights.len(),
                system.l1
            )));
        }
        let s22 = pointwise_s22(system, tol)?;
        let eta22 = s22.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            system,
            weights,
            s22,
            eta22,
            tol,
        })
    }

    pub fn eta22(&self) -> f64 {
        self.eta22
    }

    pub fn tilde_b(&self, gamma: f64) -> Result<TildeB> {
        if !(gamma > self.eta22) {
            return Err(Error::ResolventDomain {
                gamma,
                bound: self.eta22,
            });
        }
        let s = self.system;
        let l1 = s.l1;
        let w = s.grid.weights();
        let mut acc = DMat::zeros(l1, l1);
        let mut near_singular = self.s22.iter().any(|v| (gamma - v).abs() <= 1e-12);
        for a in 0..s.n() {
            let local = CoopMatrix::new(s.m_at(a))?;
            let red = schur_reduce(&local, l1, gamma, self.tol)?;
            near_singular |= red.ill_conditioned;
            let b = red.matrix.matrix();
            for i in 0..l1 {
                for j in 0..l1 {
                    acc[(i, j)] += b[(i, j)] * self.weights[j].samples[a] * w[a];
                }
            }
        }
        Ok(TildeB {
            matrix: CoopMatrix::new(acc)?,
            near_singular,
        })
    }

    pub fn s_tilde_b(&self, gamma: f64) -> Result<f64> {
        perron_bound(&self.tilde_b(gamma)?.matrix, self.tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum Threshold {
    /// Limit is the fixed point `s(B̃_γ) = γ` above `η₂₂`.
    CaseA {
        gamma_star: f64,
        fixed_point_residual: f64,
        bisection_iterations: usize,
    },
    /// Limit is `η₂₂`.
    CaseB { eta22: f64 },
}

impl Threshold {
    pub fn limit(&self) -> f64 {
        match self {
            Threshold::CaseA { gamma_star, .. } => *gamma_star,
            Threshold::CaseB { eta22 } => *eta22,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub threshold: Threshold,
    pub ladder: Ladder,
}

pub fn classify_threshold(reducer: &Reducer<'_>, margin: Option<f64>) -> Result<Classification> {
    let eta22 = reducer.eta22();
    let margin = margin.unwrap_or_else(|| ladder::default_margin(eta22));
    let ladder = ladder::evaluate(eta22, eta22, margin, |g| reducer.s_tilde_b(g))?;
    let threshold = if ladder.above {
        let root = ladder::bisect_decreasing(eta22, ladder::BISECTION_TOL, |g| {
            Ok(reducer.s_tilde_b(g)? - g)
        })?;
        let gamma_star = root.value;
        Threshold::CaseA {
            gamma_star,
            fixed_point_residual: reducer.s_tilde_b(gamma_star)? - gamma_star,
            bisection_iterations: root.iterations,
        }
    } else {
        Threshold::CaseB { eta22 }
    };
    Ok(Classification { threshold, ladder })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub species: usize,
    pub eigenvalue: f64,
    pub deviation: f64,
    pub residual: f64,
    pub uniform_fallback: bool,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedQuantities {
    pub weights: Vec<WeightSummary>,
    pub tilde_m: CoopMatrix,
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub eta22: Option<f64>,
    pub classification: Option<Classification>,
    pub tol: f64,
}

pub fn reduced_quantities(s: &SampledSystem, tol: f64) -> Result<ReducedQuantities> {
    let weights = weights_for(s, tol)?;
    let tm = tilde_m(s, &weights)?;
    let kappa_tilde = perron_bound(&tm, tol)?;
    let (kappa, eta22) = kappa_and_eta22(s, tol)?;
    let classification = if s.l1 < s.l {
        let reducer = Reducer::new(s, &weights, tol)?;
        Some(classify_threshold(&reducer, None)?)
    } else {
        None
    };
    Ok(ReducedQuantities {
        weights: weights
            .iter()
            .enumerate()
            .map(|(i, w)| WeightSummary {
                species: i,
                eigenvalue: w.eigenvalue,
                deviation: w.deviation,
                residual: w.residual,
                uniform_fallback: w.uniform_fallback,
                samples: w.samples.clone(),
            })
            .collect(),
        tilde_m: tm,
        kappa,
        kappa_tilde,
        eta22,
        classification,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefField, DispersalSystem, KernelSpec};

    const TOL: f64 = 1e-12;

    fn sampled(l1: usize, d: Vec<f64>, kernel: &str, m: &[&[&str]], n: usize) -> SampledSystem {
        let rows: Vec<Vec<&str>> = m.iter().map(|r| r.to_vec()).collect();
        let sys = DispersalSystem::new(
            l1,
            d,
            (0..l1).map(|_| KernelSpec::parse(kernel).unwrap()).collect(),
            CoefField::parse(&rows).unwrap(),
            (-1.0, 1.0),
        )
        .unwrap();
        sys.sample(&sys.grid(n).unwrap()).unwrap()
    }

    fn weight(kernel: &str, n: usize) -> PerronWeight {
        let g = Grid::new(-1.0, 1.0, n).unwrap();
        perron_weight(&KernelSpec::parse(kernel).unwrap().sample(&g).unwrap(), &g, TOL).unwrap()
    }

    #[test]
    fn symmetric_kernel_gives_constant_profile() {
        let p = weight("exp(-(x-y)^2)", 80);
        assert!(p.samples.iter().all(|v| (v - 0.5).abs() < 1e-12));
        let p = weight("1 + x*y", 80);
        assert!(p.samples.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn shifted_kernel_gives_nonconstant_profile() {
        let p = weight("exp(-(x-y-0.2)^2)", 200);
        assert!(p.deviation <= 1e-10);
        assert!(p.residual <= 1e-10);
        let spread = p.samples.iter().fold(0.0f64, |m, v| m.max(*v))
            - p.samples.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        assert!(spread > 1e-3);
        let g = Grid::new(-1.0, 1.0, 200).unwrap();
        assert!((g.integrate(&p.samples).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaged_matrix_examples() {
        let s = sampled(2, vec![1.0, 1.0], "exp(-(x-y)^2)", &[&["-1", "1"], &["1", "-1"]], 40);
        let w = weights_for(&s, TOL).unwrap();
        let tm = tilde_m(&s, &w).unwrap();
        for (a, b) in tm.matrix().as_slice().iter().zip([-1.0, 1.0, 1.0, -1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
        let s = sampled(2, vec![1.0, 1.0], "exp(-(x-y)^2)", &[&["-x^2", "1"], &["1", "-x^2"]], 400);
        let w = weights_for(&s, TOL).unwrap();
        let tm = tilde_m(&s, &w).unwrap();
        assert!((tm.matrix()[(0, 0)] + 1.0 / 3.0).abs() < 1e-5);
        assert!((perron_bound(&tm, TOL).unwrap() - 2.0 / 3.0).abs() < 1e-5);
        let (kappa, eta22) = kappa_and_eta22(&s, TOL).unwrap();
        assert!((kappa - (1.0 - 0.0025f64.powi(2))).abs() < 1e-12);
        assert!(eta22.is_none());
    }

    #[test]
    fn constant_schur_families() {
        let s = sampled(1, vec![1.0, 0.0], "exp(-(x-y)^2)", &[&["0", "1"], &["1", "0"]], 20);
        let w = weights_for(&s, TOL).unwrap();
        assert!(w[1].uniform_fallback);
        let r = Reducer::new(&s, &w, TOL).unwrap();
        assert!((r.s_tilde_b(2.0).unwrap() - 0.5).abs() < 1e-13);
        assert!(r.tilde_b(0.0).is_err());
        let c = classify_threshold(&r, None).unwrap();
        match c.threshold {
            Threshold::CaseA { gamma_star, .. } => assert!((gamma_star - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }

        let s = sampled(1, vec![1.0, 0.0], "exp(-(x-y)^2)", &[&["-1", "1"], &["1", "-1"]], 20);
        let w = weights_for(&s, TOL).unwrap();
        let r = Reducer::new(&s, &w, TOL).unwrap();
        assert!((r.s_tilde_b(1.0).unwrap() - (-1.0 + 0.5)).abs() < 1e-13);
        let c = classify_threshold(&r, None).unwrap();
        assert!(c.threshold.limit().abs() < 1e-9);
    }

    #[test]
    fn singular_sedentary_block_gives_case_b() {
        let s = sampled(
            1,
            vec![1.0, 0.0],
            "exp(-(x-y)^2)",
            &[&["-2", "0.1"], &["0.1", "-abs(x)^0.5"]],
            200,
        );
        let w = weights_for(&s, TOL).unwrap();
        let r = Reducer::new(&s, &w, TOL).unwrap();
        assert!(r.eta22() < 0.0 && r.eta22() > -0.1);
        let c = classify_threshold(&r, None).unwrap();
        assert!(matches!(c.threshold, Threshold::CaseB { .. }));
        let first = c.ladder.samples[0].value;
        assert!((first + 1.98).abs() < 0.01, "{first}");
    }

    #[test]
    fn reduced_family_is_non_increasing() {
        let s = sampled(1, vec![1.0, 0.0], "exp(-(x-y-0.2)^2)", &[&["-1 - 0.2*x^2", "1"], &["1", "-1"]], 60);
        let w = weights_for(&s, TOL).unwrap();
        let r = Reducer::new(&s, &w, TOL).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let g = -1.0 + 1e-3 * 1.3f64.powi(k);
            let v = r.s_tilde_b(g).unwrap();
            assert!(v <= prev + 1e-10);
            prev = v;
        }
    }
}

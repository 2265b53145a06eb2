//! Existence diagnostics, asymptotic sweeps in the diffusion scale and the
//! perturbation continuity probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_with_chi, chis, pointwise_a, PointwiseA};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::DMat;
use crate::matspec::{perron_bound, schur_reduce, spectral_bound_of, CoopMatrix};
use crate::model::{Mode, SampledSystem};
use crate::opspec::{essential_bound, spectral_bound_matrix};
use crate::perron::PerronOptions;
use crate::reduce::{reduced_quantities, Threshold};

/// `H(x_a) = s(A(x_a))`, `η = max H` and `h(x_a) = s(F_η(x_a))` with
/// `F_λ = A₁₁ + A₁₂(λ − A₂₂)⁻¹A₂₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub points: Vec<f64>,
    pub big_h: Vec<f64>,
    pub eta: f64,
    pub small_h: Vec<f64>,
}

pub fn spectral_field(s: &SampledSystem, pa: &PointwiseA, tol: f64) -> Result<SpectralField> {
    let big_h = pa
        .matrices
        .iter()
        .map(|m| spectral_bound_of(m, tol))
        .collect::<Result<Vec<_>>>()?;
    let eta = big_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let small_h = if s.l1 < s.l {
        pa.matrices
            .iter()
            .map(|m| {
                let red = schur_reduce(&CoopMatrix::new(m.clone())?, s.l1, eta, tol)?;
                perron_bound(&red.matrix, tol)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        big_h.clone()
    };
    Ok(SpectralField {
        points: s.grid.points().to_vec(),
        big_h,
        eta,
        small_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `(η − H)⁻¹` is likely not integrable near the maximum.
    CriterionHolds,
    CriterionFails,
    /// `H` attains its maximum on a plateau of nodes.
    DegenerateMax,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvidence {
    pub n: usize,
    pub eta: f64,
    /// Fitted peak level used for the local-order fit and the sums.
    pub eta_fit: f64,
    pub x_max: f64,
    pub plateau: usize,
    pub sum: f64,
    pub order: f64,
    pub fit_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub verdict: Verdict,
    pub region: (f64, f64),
    pub floor: f64,
    pub grids: Vec<GridEvidence>,
    pub ratios: Vec<f64>,
    pub order: f64,
}

pub const DEFAULT_FIT_WINDOW: usize = 10;
const FLOOR: f64 = 1e-13;
const RATIO_GROWTH: f64 = 1.05;

/// Samples of `H` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Evidence on whether `∫ (η − H)⁻¹` diverges, from a refining sequence of
/// grids. The peak level is refitted per grid: `ln(η̂ − H)` is regressed on
/// `ln|x − x_max|` over the nearest `window` nodes with `η̂ ≥ max H` chosen to
/// minimize the residual, and the sums use `η̂`.
pub fn integrability_diagnostic(
    fields: &[FieldSamples],
    region: (f64, f64),
    window: usize,
) -> Result<IntegrabilityReport> {
    if fields.is_empty() {
        return Err(Error::Dimension("no grids supplied".into()));
    }
    let mut grids = Vec::with_capacity(fields.len());
    let mut floor_used = FLOOR;
    for f in fields {
        if f.values.len() != f.grid.n() {
            return Err(Error::Dimension(format!(
                "{} samples for {} nodes",
                f.values.len(),
                f.grid.n()
            )));
        }
        let nodes: Vec<(f64, f64, f64)> = f
            .grid
            .points()
            .iter()
            .zip(f.grid.weights())
            .zip(&f.values)
            .filter(|((x, _), _)| **x >= region.0 && **x <= region.1)
            .map(|((x, w), h)| (*x, *w, *h))
            .collect();
        if nodes.is_empty() {
            return Err(Error::InvalidDomain(format!(
                "region ({}, {}) contains no nodes",
                region.0, region.1
            )));
        }
        let eta = nodes.iter().map(|n| n.2).fold(f64::NEG_INFINITY, f64::max);
        let floor = FLOOR * eta.abs().max(1.0);
        floor_used = floor;
        let top: Vec<f64> = nodes.iter().filter(|n| eta - n.2 <= floor).map(|n| n.0).collect();
        let x_max = top.iter().sum::<f64>() / top.len() as f64;
        let mut near: Vec<(f64, f64)> = nodes
            .iter()
            .filter(|n| eta - n.2 > floor)
            .map(|n| ((n.0 - x_max).abs(), eta - n.2))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        near.truncate(window);
        let (order, delta) = fit_order(&near);
        let eta_fit = eta + delta;
        let sum = nodes
            .iter()
            .filter(|n| eta_fit - n.2 > floor)
            .map(|n| n.1 / (eta_fit - n.2))
            .sum();
        grids.push(GridEvidence {
            n: f.grid.n(),
            eta,
            eta_fit,
            x_max,
            plateau: top.len(),
            sum,
            order,
            fit_window: near.len(),
        });
    }
    let ratios: Vec<f64> = grids.windows(2).map(|w| w[1].sum / w[0].sum).collect();
    let finest = grids.last().expect("non-empty");
    let order = finest.order;
    let verdict = if finest.plateau >= 3 {
        Verdict::DegenerateMax
    } else if order >= 1.0 || (!ratios.is_empty() && ratios.iter().all(|&r| r > RATIO_GROWTH)) {
        Verdict::CriterionHolds
    } else if order < 1.0 && ratios.iter().all(|&r| r <= RATIO_GROWTH) {
        Verdict::CriterionFails
    } else {
        Verdict::Inconclusive
    };
    Ok(IntegrabilityReport {
        verdict,
        region,
        floor: floor_used,
        grids,
        ratios,
        order,
    })
}

/// Slope and peak offset of the best fit `ln(gap + δ) ≈ c + p ln(dist)`.
fn fit_order(pts: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 > 0.0).collect();
    if pts.len() < 2 {
        return (f64::NAN, 0.0);
    }
    let span = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let ssr = |delta: f64| regress(&pts, delta);
    // Coarse search over log δ, then golden refinement around the best.
    let (lo_exp, hi_exp) = (-10.0, 1.0);
    let steps = 111;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let zero = ssr(0.0);
    if zero.0 < best.0 {
        best = (zero.0, zero.1, 0.0);
    }
    let mut best_u = f64::NAN;
    for k in 0..steps {
        let u = lo_exp + (hi_exp - lo_exp) * k as f64 / (steps - 1) as f64;
        let delta = span * 10f64.powf(u);
        let (r, p) = ssr(delta);
        if r < best.0 {
            best = (r, p, delta);
            best_u = u;
        }
    }
    if best_u.is_finite() {
        let h = (hi_exp - lo_exp) / (steps - 1) as f64;
        let (mut a, mut b) = (best_u - h, best_u + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |u: f64| ssr(span * 10f64.powf(u)).0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        let u = 0.5 * (a + b);
        let delta = span * 10f64.powf(u);
        let (r, p) = ssr(delta);
        if r < best.0 {
            best = (r, p, delta);
        }
    }
    (best.1, best.2)
}

fn regress(pts: &[(f64, f64)], delta: f64) -> (f64, f64) {
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| (p.1 + delta).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::INFINITY, f64::NAN);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    (ssr, slope)
}

/// `s(T_λ) − λ`, where `T_λ` acts on the dispersing species as the kernel
/// part `d_i K_i` plus pointwise multiplication by `F_λ(x_a)`.
pub fn generalized_eigen_residual(s: &SampledSystem, lambda: f64, opts: &PerronOptions) -> Result<f64> {
    let chi = chis(s);
    let pa = pointwise_a(s, &chi);
    let (n, l1) = (s.n(), s.l1);
    let w = s.grid.weights();
    let mut t = DMat::zeros(l1 * n, l1 * n);
    for a in 0..n {
        let local = CoopMatrix::new(pa.matrices[a].clone())?;
        let f = schur_reduce(&local, l1, lambda, opts.tol)?.matrix.into_inner();
        for i in 0..l1 {
            for j in 0..l1 {
                t[(i * n + a, j * n + a)] = f[(i, j)];
            }
        }
    }
    for i in 0..l1 {
        let di = s.d[i];
        if di == 0.0 {
            continue;
        }
        let k = &s.kernels[i];
        for a in 0..n {
            for b in 0..n {
                t[(i * n + a, i * n + b)] += di * k[(a, b)] * w[b];
            }
        }
    }
    let est = spectral_bound_matrix(&t, opts);
    if !est.converged {
        return Err(Error::NotConverged {
            what: "generalized eigenvalue operator",
            iterations: est.iterations,
            estimate: est.value,
            residual: est.residual,
        });
    }
    Ok(est.value - lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// All rates scaled by `t`; reference `κ`.
    SmallD,
    /// Dispersing rates scaled by `t`, every species disperses; reference `κ̃`.
    LargeDNonDegen,
    /// Dispersing rates scaled by `t` with sedentary species; reference is the
    /// threshold limit.
    LargeDDegen,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::SmallD => "small-d",
            SweepMode::LargeDNonDegen => "large-d-non-degen",
            SweepMode::LargeDDegen => "large-d-degen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Kappa,
    KappaTilde,
    GammaStar,
    Eta22,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub s: f64,
    pub s_e: f64,
    pub gap: f64,
    pub reference: f64,
    /// `s − reference`.
    pub deviation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub mode: SweepMode,
    pub reference_kind: ReferenceKind,
    pub reference: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s,s_e,gap,reference,deviation,converged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.t, r.s, r.s_e, r.gap, r.reference, r.deviation, r.converged
            ));
        }
        out
    }
}

/// Reference limit for a sweep mode.
pub fn sweep_reference(s: &SampledSystem, mode: SweepMode, tol: f64) -> Result<(ReferenceKind, f64)> {
    match mode {
        SweepMode::SmallD => {
            let (kappa, _) = crate::reduce::kappa_and_eta22(s, tol)?;
            Ok((ReferenceKind::Kappa, kappa))
        }
        SweepMode::LargeDNonDegen => {
            if s.l1 != s.l {
                return Err(Error::Mode(
                    "large-d-non-degen needs every species to disperse".into(),
                ));
            }
            Ok((ReferenceKind::KappaTilde, reduced_quantities(s, tol)?.kappa_tilde))
        }
        SweepMode::LargeDDegen => {
            if s.l1 == s.l {
                return Err(Error::Mode(
                    "large-d-degen needs at least one sedentary species".into(),
                ));
            }
            let rq = reduced_quantities(s, tol)?;
            match rq.classification.map(|c| c.threshold) {
                Some(Threshold::CaseA { gamma_star, .. }) => Ok((ReferenceKind::GammaStar, gamma_star)),
                Some(Threshold::CaseB { eta22 }) => Ok((ReferenceKind::Eta22, eta22)),
                None => Err(Error::Mode("no threshold classification".into())),
            }
        }
    }
}

pub fn sweep(s: &SampledSystem, schedule: &[f64], mode: SweepMode, opts: &PerronOptions) -> Result<SweepTable> {
    if let Some(t) = schedule.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameters(format!("sweep scale must be positive, got {t}")));
    }
    if mode == SweepMode::LargeDDegen && s.mode() == Mode::NonDegenerate {
        return Err(Error::Mode("large-d-degen on a non-degenerate system".into()));
    }
    let (reference_kind, reference) = sweep_reference(s, mode, opts.tol)?;
    let chi = chis(s);
    let mut ts = schedule.to_vec();
    ts.sort_by(f64::total_cmp);
    let rows = ts
        .par_iter()
        .map(|&t| {
            let d: Vec<f64> = s
                .d
                .iter()
                .enumerate()
                .map(|(i, &v)| match mode {
                    SweepMode::SmallD => v * t,
                    _ if i < s.l1 => v * t,
                    _ => v,
                })
                .collect();
            let scaled = s.with_d(d)?;
            let op = assemble_with_chi(&scaled, chi.clone());
            let est = spectral_bound_matrix(&op.matrix, opts);
            let s_e = essential_bound(&pointwise_a(&scaled, &chi), opts.tol)?;
            Ok(SweepRow {
                t,
                s: est.value,
                s_e,
                gap: est.value - s_e,
                reference,
                deviation: est.value - reference,
                converged: est.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        mode,
        reference_kind,
        reference,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbeMode {
    Random { delta: f64 },
    /// Adds `shift` to every diagonal coefficient.
    DiagonalShift { shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub mode: ProbeMode,
    pub seed: u64,
    pub norm_dm: f64,
    pub norm_dk: f64,
    pub s_before: f64,
    pub s_after: f64,
    pub ds: f64,
    /// `max(‖E‖∞, s(P + |E|) − s(P))` with `E = P′ − P`.
    pub bound: f64,
}

/// Perturbs the sampled coefficients and kernels and reports the change in
/// the spectral bound together with a comparison bound.
pub fn perturbation_probe(s: &SampledSystem, mode: ProbeMode, seed: u64, opts: &PerronOptions) -> Result<ProbeResult> {
    let mut pert = s.clone();
    let l = s.l;
    let mut norm_dm = 0.0f64;
    let mut norm_dk = 0.0f64;
    match mode {
        ProbeMode::Random { delta } => {
            if !(delta >= 0.0) {
                return Err(Error::InvalidParameters(format!("probe size must be >= 0, got {delta}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for a in 0..s.n() {
                for i in 0..l {
                    for j in 0..l {
                        let u: f64 = rng.gen();
                        let dm = if i == j { delta * (2.0 * u - 1.0) } else { delta * u };
                        pert.m[(a * l + i) * l + j] += dm;
                        norm_dm = norm_dm.max(dm.abs());
                    }
                }
            }
            for k in &mut pert.kernels {
                for v in k.as_mut_slice() {
                    let dk = delta * rng.gen::<f64>();
                    *v += dk;
                    norm_dk = norm_dk.max(dk);
                }
            }
        }
        ProbeMode::DiagonalShift { shift } => {
            for a in 0..s.n() {
                for i in 0..l {
                    pert.m[(a * l + i) * l + i] += shift;
                }
            }
            norm_dm = shift.abs();
        }
    }
    let p0 = assemble_with_chi(s, chis(s)).matrix;
    let p1 = assemble_with_chi(&pert, chis(&pert)).matrix;
    let s0 = spectral_bound_matrix(&p0, opts).value;
    let s1 = spectral_bound_matrix(&p1, opts).value;
    let e = p1.sub(&p0);
    let upper = {
        let mut m = p0.clone();
        for (x, d) in m.as_mut_slice().iter_mut().zip(e.as_slice()) {
            *x += d.abs();
        }
        spectral_bound_matrix(&m, opts).value
    };
    Ok(ProbeResult {
        mode,
        seed,
        norm_dm,
        norm_dk,
        s_before: s0,
        s_after: s1,
        ds: s1 - s0,
        bound: e.norm_inf().max(upper - s0),
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

    fn field(h: impl Fn(f64) -> f64, n: usize) -> FieldSamples {
        let grid = Grid::new(-1.0, 1.0, n).unwrap();
        let values = grid.sample(h);
        FieldSamples { grid, values }
    }

    #[test]
    fn quadratic_peak_makes_reciprocal_non_integrable() {
        let fields: Vec<_> = [100, 200, 400].iter().map(|&n| field(|x| 1.0 - x * x, n)).collect();
        let r = integrability_diagnostic(&fields, (-1.0, 1.0), DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, Verdict::CriterionHolds);
        assert!((r.order - 2.0).abs() < 0.2, "{}", r.order);
        assert!(r.ratios.iter().all(|&q| q > 1.5));
    }

    #[test]
    fn square_root_peak_keeps_reciprocal_integrable() {
        let fields: Vec<_> = [100, 200, 400].iter().map(|&n| field(|x| 1.0 - x.abs().sqrt(), n)).collect();
        let r = integrability_diagnostic(&fields, (-1.0, 1.0), DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, Verdict::CriterionFails);
        assert!((r.order - 0.5).abs() < 0.05);
        assert!((r.grids[2].sum - 4.0).abs() < 0.2);
    }

    #[test]
    fn flat_field_is_degenerate() {
        let fields = vec![field(|_| 0.3, 50), field(|_| 0.3, 100)];
        let r = integrability_diagnostic(&fields, (-1.0, 1.0), DEFAULT_FIT_WINDOW).unwrap();
        assert_eq!(r.verdict, Verdict::DegenerateMax);
    }

    #[test]
    fn spectral_field_laws() {
        let s = sampled(1, vec![3.0, 0.0], "exp(-(x-y)^2)", &[&["-1 - 0.2*x^2", "1"], &["1", "-1"]], 60);
        let pa = pointwise_a(&s, &chis(&s));
        let f = spectral_field(&s, &pa, TOL).unwrap();
        for (h, big) in f.small_h.iter().zip(&f.big_h) {
            assert!(*h <= big + 1e-10);
        }
        let hmax = f.small_h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((hmax - f.eta).abs() < 1e-9);
    }

    #[test]
    fn residual_without_sedentary_block_is_bound_minus_lambda() {
        let s = sampled(1, vec![0.5], "exp(-(x-y)^2)", &[&["1 - x^2"]], 40);
        let op = assemble_with_chi(&s, chis(&s));
        let sp = spectral_bound_matrix(&op.matrix, &PerronOptions::default()).value;
        let r = generalized_eigen_residual(&s, 0.2, &PerronOptions::default()).unwrap();
        assert!((r - (sp - 0.2)).abs() < 1e-10);
    }

    #[test]
    fn residual_vanishes_at_principal_eigenvalue() {
        let s = sampled(1, vec![2.0, 0.0], "exp(-(x-y)^2)", &[&["-1 - 0.2*x^2", "1"], &["1", "-1"]], 60);
        let op = assemble_with_chi(&s, chis(&s));
        let sp = spectral_bound_matrix(&op.matrix, &PerronOptions::default()).value;
        let r = generalized_eigen_residual(&s, sp, &PerronOptions::default()).unwrap();
        assert!(r.abs() < 1e-9, "{r}");
    }

    #[test]
    fn sweep_rows_are_sorted_and_finite() {
        let s = sampled(2, vec![1.0, 1.0], "exp(-(x-y)^2)", &[&["-x^2", "1"], &["1", "-x^2"]], 40);
        let t = sweep(&s, &[1.0, 0.01, 0.1], SweepMode::SmallD, &PerronOptions::default()).unwrap();
        assert_eq!(t.reference_kind, ReferenceKind::Kappa);
        let ts: Vec<f64> = t.rows.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.01, 0.1, 1.0]);
        assert!(t.rows.iter().all(|r| r.deviation.is_finite() && r.converged));
        let csv = t.to_csv();
        assert!(csv.starts_with("t,s,s_e,gap,reference,deviation,converged\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn probe_examples() {
        let s = sampled(2, vec![0.5, 1.0], "exp(-(x-y)^2)", &[&["-x^2", "1"], &["1", "-x^2"]], 30);
        let opts = PerronOptions::default();
        let zero = perturbation_probe(&s, ProbeMode::Random { delta: 0.0 }, 7, &opts).unwrap();
        assert_eq!(zero.ds, 0.0);
        let shift = perturbation_probe(&s, ProbeMode::DiagonalShift { shift: 0.37 }, 0, &opts).unwrap();
        assert!((shift.ds - 0.37).abs() < 1e-12, "{}", shift.ds - 0.37);
        let r = perturbation_probe(&s, ProbeMode::Random { delta: 1e-3 }, 3, &opts).unwrap();
        assert!(r.ds.abs() <= r.bound);
        let again = perturbation_probe(&s, ProbeMode::Random { delta: 1e-3 }, 3, &opts).unwrap();
        assert_eq!(r, again);
    }
}

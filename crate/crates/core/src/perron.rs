//! Perron root of Metzler (cooperative) matrices.
//!
//! For a Metzler matrix `A` and `c = 1 + max(0, −min diag A)`, the matrix
//! `A + cI` is nonnegative with a positive diagonal, its spectral radius is
//! real and equals `s(A) + c`. The solver runs power iteration on `A + cI`
//! and, when that has not met the residual tolerance within its budget,
//! switches to Noda's shift-invert iteration: with a positive iterate `v`,
//! the Collatz–Wielandt quotient `σ = max_i (Av)_i / v_i` is an upper bound
//! for `s(A)`, so `(σI − A)⁻¹` is nonnegative and the iterate stays positive
//! while the shift converges superlinearly.

use serde::{Deserialize, Serialize};

use crate::linalg::{DMat, Lu};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronOptions {
    /// Relative residual `‖(A + cI)v − ρv‖∞ / (ρ‖v‖∞)`.
    pub tol: f64,
    /// Power-iteration cap.
    pub max_iter: usize,
    /// Power iterations tried before switching to shift-invert; `None`
    /// picks the full cap for small matrices and a short warm-up otherwise.
    pub power_budget: Option<usize>,
    pub refine_budget: usize,
}

impl Default for PerronOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100_000,
            power_budget: None,
            refine_budget: 100,
        }
    }
}

impl PerronOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronOutcome {
    pub value: f64,
    /// Nonnegative iterate normalized to unit maximum.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Last update moved the normalized iterate by at most `sqrt(tol)`.
    pub direction_converged: bool,
    /// Collatz–Wielandt bracket when the final iterate is strictly positive.
    pub bracket: Option<(f64, f64)>,
}

/// `1 + max(0, −min diag A)`.
pub fn positivity_shift(a: &DMat) -> f64 {
    let min_diag = a.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    1.0 + (-min_diag).max(0.0)
}

const SMALL: usize = 64;
const WARMUP: usize = 300;
const POLISH_MAX: usize = 1024;
const POLISH_STEPS: usize = 3;

pub fn perron(a: &DMat, opts: &PerronOptions) -> PerronOutcome {
    assert!(a.is_square() && a.rows() > 0, "square non-empty matrix");
    let n = a.rows();
    let c = positivity_shift(a);
    let budget = opts
        .power_budget
        .unwrap_or(if n <= SMALL { opts.max_iter } else { WARMUP })
        .min(opts.max_iter);

    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let mut value = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut step = f64::INFINITY;

    for _ in 0..budget {
        iterations += 1;
        a.mul_vec_into(&v, &mut w);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += c * vi;
        }
        let rho = w.iter().sum::<f64>() / v.iter().sum::<f64>();
        let vmax = max_abs(&v);
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - rho * vi).abs())
            .fold(0.0, f64::max)
            / (rho * vmax);
        value = rho - c;
        let wmax = max_abs(&w);
        if !(wmax.is_finite() && wmax > 0.0) {
            break;
        }
        step = 0.0;
        for (vi, wi) in v.iter_mut().zip(&w) {
            let next = wi / wmax;
            step = step.max((next - *vi).abs());
            *vi = next;
        }
        if residual <= opts.tol {
            if n <= POLISH_MAX {
                polish(a, &mut v, c, &mut iterations);
            }
            return finish(a, v, value, iterations, residual, true, step, opts.tol);
        }
    }

    // Shift-invert refinement.
    let mut av = vec![0.0; n];
    for _ in 0..opts.refine_budget {
        a.mul_vec_into(&v, &mut av);
        let (lo, hi, all_positive) = collatz_wielandt(&av, &v);
        value = av.iter().sum::<f64>() / v.iter().sum::<f64>();
        let scale = value.abs() + c;
        residual = av
            .iter()
            .zip(&v)
            .map(|(x, vi)| (x - value * vi).abs())
            .fold(0.0, f64::max)
            / (scale * max_abs(&v));
        if residual <= opts.tol
            || (all_positive && hi - lo <= 4.0 * f64::EPSILON * (hi.abs() + c))
        {
            return finish(a, v, value, iterations, residual, true, step, opts.tol);
        }
        iterations += 1;
        let sigma = hi + 16.0 * f64::EPSILON * (hi.abs() + c);
        let mut shifted = a.map(|x| -x);
        shifted.add_diagonal(sigma);
        let lu = match Lu::factor_with_floor(&shifted, f64::EPSILON * scale) {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let mut next = lu.solve(&v);
        next.iter_mut().for_each(|x| *x = x.max(0.0));
        let nmax = max_abs(&next);
        if !(nmax.is_finite() && nmax > 0.0) {
            break;
        }
        step = 0.0;
        for (vi, xi) in v.iter_mut().zip(&next) {
            let x = xi / nmax;
            step = step.max((x - *vi).abs());
            *vi = x;
        }
    }
    // Final estimate from the last iterate.
    a.mul_vec_into(&v, &mut av);
    let est = av.iter().sum::<f64>() / v.iter().sum::<f64>();
    if est.is_finite() {
        value = est;
        residual = av
            .iter()
            .zip(&v)
            .map(|(x, vi)| (x - value * vi).abs())
            .fold(0.0, f64::max)
            / ((value.abs() + c) * max_abs(&v));
    }
    let converged = residual <= opts.tol;
    finish(a, v, value, iterations, residual, converged, step, opts.tol)
}

/// A few shift-invert steps from an already converged positive iterate;
/// the eigenvector error then drops quadratically.
fn polish(a: &DMat, v: &mut [f64], c: f64, iterations: &mut usize) {
    let n = v.len();
    let mut av = vec![0.0; n];
    for _ in 0..POLISH_STEPS {
        a.mul_vec_into(v, &mut av);
        let (lo, hi, all_positive) = collatz_wielandt(&av, v);
        if !all_positive || hi - lo <= 4.0 * f64::EPSILON * (hi.abs() + c) {
            return;
        }
        let sigma = hi + 16.0 * f64::EPSILON * (hi.abs() + c);
        let mut shifted = a.map(|x| -x);
        shifted.add_diagonal(sigma);
        let Ok(lu) = Lu::factor_with_floor(&shifted, f64::EPSILON * (hi.abs() + c)) else {
            return;
        };
        let mut next = lu.solve(v);
        next.iter_mut().for_each(|x| *x = x.max(0.0));
        let nmax = max_abs(&next);
        if !(nmax.is_finite() && nmax > 0.0) {
            return;
        }
        *iterations += 1;
        for (vi, xi) in v.iter_mut().zip(&next) {
            *vi = xi / nmax;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    a: &DMat,
    v: Vec<f64>,
    value: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
    step: f64,
    tol: f64,
) -> PerronOutcome {
    let av = a.mul_vec(&v);
    let (lo, hi, all_positive) = collatz_wielandt(&av, &v);
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let rayleigh = v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>() / vv;
    let value = if rayleigh.is_finite() { rayleigh } else { value };
    PerronOutcome {
        value,
        vector: v,
        iterations,
        residual,
        converged,
        direction_converged: step <= tol.sqrt(),
        bracket: all_positive.then_some((lo, hi)),
    }
}

fn collatz_wielandt(av: &[f64], v: &[f64]) -> (f64, f64, bool) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut all_positive = true;
    for (x, &vi) in av.iter().zip(v) {
        if vi > 0.0 {
            let r = x / vi;
            lo = lo.min(r);
            hi = hi.max(r);
        } else {
            all_positive = false;
        }
    }
    (lo, hi, all_positive)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

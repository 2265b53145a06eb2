//! One-sided limit classification on a fixed ε ladder and root bracketing
//! for decreasing functions; shared by the threshold and R₀ dichotomies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPSILONS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
pub const BISECTION_TOL: f64 = 1e-10;
pub const BISECTION_CAP: usize = 200;
const START_OFFSET: f64 = 1e-6;
const DOUBLING_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSample {
    pub epsilon: f64,
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub base: f64,
    pub threshold: f64,
    pub margin: f64,
    pub samples: Vec<LadderSample>,
    /// Every sample exceeds `threshold + margin`.
    pub above: bool,
}

pub fn default_margin(threshold: f64) -> f64 {
    1e-4 * threshold.abs().max(1.0)
}

/// Evaluates `f(base + ε)` for ε down the ladder. `f` is expected to be
/// non-increasing, so samples must be non-decreasing as ε shrinks.
pub fn evaluate(
    base: f64,
    threshold: f64,
    margin: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<Ladder> {
    let mut samples = Vec::with_capacity(EPSILONS.len());
    for eps in EPSILONS {
        let at = base + eps;
        samples.push(LadderSample {
            epsilon: eps,
            at,
            value: f(at)?,
        });
    }
    let oscillates = samples.windows(2).any(|w| {
        let (prev, next) = (w[0].value, w[1].value);
        next.is_nan() || next < prev - 1e-10 * prev.abs().max(1.0)
    });
    if oscillates {
        return Err(Error::ClassificationFailure {
            samples: samples.iter().map(|s| (s.at, s.value)).collect(),
        });
    }
    let above = samples.iter().all(|s| s.value > threshold + margin);
    Ok(Ladder {
        base,
        threshold,
        margin,
        samples,
        above,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Root of a decreasing `g` above `base`: brackets by doubling the offset
/// from `base + 1e-6` until `g < 0`, then bisects to `tol`.
pub fn bisect_decreasing(base: f64, tol: f64, mut g: impl FnMut(f64) -> Result<f64>) -> Result<Root> {
    let mut lo = base + START_OFFSET;
    let g_lo = g(lo)?;
    if !(g_lo > 0.0) {
        return Err(Error::Inconsistency(format!(
            "function is not positive just above the boundary ({g_lo:e} at {lo})"
        )));
    }
    let mut width = START_OFFSET;
    let mut hi = lo;
    let mut bracketed = false;
    for _ in 0..DOUBLING_CAP {
        width *= 2.0;
        hi = base + width;
        let v = g(hi)?;
        if v < 0.0 {
            bracketed = true;
            break;
        }
        if v == 0.0 {
            return Ok(Root {
                value: hi,
                bracket: (hi, hi),
                iterations: 0,
            });
        }
        lo = hi;
    }
    if !bracketed {
        return Err(Error::NotConverged {
            what: "root bracketing",
            iterations: DOUBLING_CAP,
            estimate: hi,
            residual: f64::INFINITY,
        });
    }
    let mut iterations = 0;
    while hi - lo > tol && iterations < BISECTION_CAP {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
    })
}

//! Small cooperative matrices: spectral bound, irreducibility and the
//! Schur-complement reduction onto the leading block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_inf, DMat, Lu};
use crate::model::{disconnected_species, TOL_ZERO};
use crate::perron::{perron, PerronOptions};

pub const ILL_CONDITIONED: f64 = 1e14;

/// Square matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoopMatrix(DMat);

impl CoopMatrix {
    pub fn new(m: DMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "cooperative matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_metzler(TOL_ZERO) {
            return Err(Error::InvalidParameters(
                "matrix has a negative off-diagonal entry".into(),
            ));
        }
        Ok(Self(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(DMat::from_rows(rows))
    }

    pub fn order(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &DMat {
        &self.0
    }

    pub fn into_inner(self) -> DMat {
        self.0
    }

    fn corner(&self, l1: usize) -> (DMat, DMat, DMat, DMat) {
        let l = self.order();
        let l2 = l - l1;
        (
            self.0.block(0, 0, l1, l1),
            self.0.block(0, l1, l1, l2),
            self.0.block(l1, 0, l2, l1),
            self.0.block(l1, l1, l2, l2),
        )
    }
}

/// Spectral bound of a Metzler matrix given as a plain [`DMat`].
pub fn spectral_bound_of(m: &DMat, tol: f64) -> Result<f64> {
    let out = perron(m, &PerronOptions::with_tol(tol));
    if out.converged {
        Ok(out.value)
    } else {
        Err(Error::NotConverged {
            what: "Perron root",
            iterations: out.iterations,
            estimate: out.value,
            residual: out.residual,
        })
    }
}

pub fn perron_bound(c: &CoopMatrix, tol: f64) -> Result<f64> {
    spectral_bound_of(c.matrix(), tol)
}

pub fn is_irreducible(c: &CoopMatrix) -> bool {
    c.order() <= 1 || disconnected_species(c.matrix(), TOL_ZERO).is_empty()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurReduced {
    pub matrix: CoopMatrix,
    /// ∞-norm condition number of `γI − C₂₂` (1 when the block is empty).
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// `C₁₁ + C₁₂ (γI − C₂₂)⁻¹ C₂₁`, defined for `γ > s(C₂₂)`.
pub fn schur_reduce(c: &CoopMatrix, l1: usize, gamma: f64, tol: f64) -> Result<SchurReduced> {
    let l = c.order();
    if l1 == 0 || l1 > l {
        return Err(Error::Dimension(format!("need 1 <= l1 <= {l}, got {l1}")));
    }
    if l1 == l {
        return Ok(SchurReduced {
            matrix: c.clone(),
            condition: 1.0,
            ill_conditioned: false,
        });
    }
    let (c11, c12, c21, c22) = c.corner(l1);
    let bound = spectral_bound_of(&c22, tol)?;
    if !(gamma > bound) {
        return Err(Error::ResolventDomain { gamma, bound });
    }
    let mut shifted = c22.map(|v| -v);
    shifted.add_diagonal(gamma);
    let condition = condition_inf(&shifted);
    let resolvent = Lu::factor(&shifted)?.inverse();
    let mut reduced = c11;
    let prod = c12.matmul(&resolvent).matmul(&c21);
    for (r, p) in reduced.as_mut_slice().iter_mut().zip(prod.as_slice()) {
        *r += p;
    }
    Ok(SchurReduced {
        matrix: CoopMatrix(reduced),
        condition,
        ill_conditioned: condition > ILL_CONDITIONED,
    })
}

/// `s(C − diag(μ, …, μ, 0, …, 0))` for each `μ`, the shift acting on the
/// leading `l1` entries.
pub fn large_shift_limit_check(c: &CoopMatrix, l1: usize, mus: &[f64], tol: f64) -> Result<Vec<f64>> {
    mus.iter()
        .map(|&mu| {
            let mut m = c.matrix().clone();
            for i in 0..l1.min(c.order()) {
                m[(i, i)] -= mu;
            }
            spectral_bound_of(&m, tol)
        })
        .collect()
}

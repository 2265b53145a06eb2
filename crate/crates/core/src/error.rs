use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("expression error in {context}: {source}")]
    Expr {
        context: String,
        #[source]
        source: ExprError,
    },

    #[error("hypothesis validation failed with {count} violation(s); rerun with force to assemble anyway")]
    Validation { count: usize },

    #[error("{what} did not converge after {iterations} iterations (last estimate {estimate}, residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("resolvent parameter {gamma} is not above the spectral bound {bound} of the non-diffusing block")]
    ResolventDomain { gamma: f64, bound: f64 },

    #[error("discrete Perron weight eigenvalue {eigenvalue} deviates from 1 by more than {allowed:e}; refine the grid")]
    GridConsistency { eigenvalue: f64, allowed: f64 },

    #[error("inconsistent certificate: {0}")]
    Inconsistency(String),

    #[error("dense spectrum refused: operator size {size} exceeds the cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("threshold classification failed: ladder values are not monotone ({samples:?})")]
    ClassificationFailure { samples: Vec<(f64, f64)> },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("mode mismatch: {0}")]
    Mode(String),
}

impl Error {
    pub(crate) fn expr(context: impl Into<String>, source: ExprError) -> Self {
        Error::Expr {
            context: context.into(),
            source,
        }
    }
}

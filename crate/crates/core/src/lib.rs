//! Numerical spectral theory for cooperative nonlocal dispersal systems on
//! one-dimensional intervals.
//!
//! The crate discretizes the operator
//!
//! ```text
//! [P(d)u]_i(x) = d_i ( ∫ k_i(x,y) u_i(y) dy − χ_i(x) u_i(x) ) + Σ_j m_ij(x) u_j(x)
//! ```
//!
//! with a midpoint-rule Nyström scheme and provides spectral bounds, essential
//! spectral bounds, principal-eigenpair certificates, the reduced quantities
//! that govern small- and large-diffusion limits, and a basic reproduction
//! ratio calculator for a virus/infected-cell model with nonlocal viral
//! dispersal.

pub mod analysis;
pub mod assembly;
mod dense;
pub mod epidemic;
pub mod error;
pub mod expr;
pub mod grid;
pub mod ladder;
pub mod linalg;
pub mod matspec;
pub mod model;
pub mod opspec;
pub mod perron;
pub mod reduce;

pub use error::{Error, Result};
pub use expr::Expr;
pub use grid::Grid;
pub use linalg::DMat;

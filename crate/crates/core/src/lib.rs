//! Computational engine for the complex Weyl algebra with 2m generators.
//!
//! Polynomials are multiplied with K-ordered star products, orderings are
//! related by intertwiners, and star exponentials of quadratic forms are
//! Gaussians `g exp(Q[z])` whose amplitude is only determined up to sign.
//! The sign is tracked explicitly by continuation along paths.

pub mod error;
pub mod expr;
pub mod gaussian;
pub mod intertwiner;
pub mod linalg;
pub mod poly;
pub mod star_exponential;
pub mod two_valued;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use poly::{OrderingK, Params, PolyC};

//! Reduced radial Coulomb cost for multimarginal transport in the plane, cyclical
//! monotone transport maps between equal-mass radial shells, c-monotonicity tests and
//! exact discretized Kantorovich problems.

pub mod coulomb;
pub mod error;
pub mod kantorovich;
pub mod measures;
pub mod monotonicity;
pub mod report;
pub mod taylor;

pub use error::{Error, Result};

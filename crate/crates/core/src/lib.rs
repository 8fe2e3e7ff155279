//! Convex duality toolkit.
//!
//! Subspace correction, alternating projections, operator splitting and
//! multiplier methods, each with a dual counterpart whose iterates can be
//! compared against the primal run.

pub mod admm;
pub mod convex;
pub mod correction;
pub mod duality;
pub mod error;
pub mod linops;
pub mod pairings;
pub mod problems;
pub mod projsplit;
pub mod trace;

pub use error::{Error, Result};
pub use linops::{LinOp, Matrix, Vector};

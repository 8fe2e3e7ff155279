//! Convex functions and sets with proximal maps, conjugates and an inner
//! solver for the local problems of every algorithm in the crate.

mod entropy;
mod function;
mod minimize;
mod sets;

pub use function::{bregman, fenchel_young_residual, prox_conjugate_via_moreau, ConvexFn};
pub use minimize::{minimize, minimize_composite};
pub use sets::{AffineSubspace, ConvexSet, MEMBERSHIP_TOL};

//! Rotational smoothing of direction-degenerate homogeneous symbols.
//!
//! The crate builds the multipliers `1/q_α(Qe₁·ξ, …, Qe_k·ξ)`, the tempered
//! extensions of `1/q_α`, their restrictions to the sphere and the Sobolev
//! norms that control averages of the solution operator over `SO(n)`.

pub mod counterexamples;
pub mod error;
pub mod homog_dist;
pub mod quad;
pub mod rotations;
pub mod smoothing;
pub mod special;
pub mod sphere;
pub mod symbols;

pub use error::{Error, Result};
pub use quad::C64;

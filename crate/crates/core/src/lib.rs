//! Hyperbolic affine spheres over convex domains: a Dirichlet solver for
//! `det D^2 u = (-1/u)^{n+2}`, the projective transformation law, affine and
//! centroaffine invariants, Legendre duality, and numerical verification
//! studies.

// `!(x > 0.0)` is used on purpose so NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod domain;
pub mod error;
pub mod exec;
pub mod harness;
pub mod invariants;
pub mod legendre;
pub mod linalg;
pub mod output;
pub mod solver;

pub use error::{Error, Result};
pub use exec::ExecPolicy;

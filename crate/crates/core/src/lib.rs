//! Error-bound machinery for structured convex problems
//! `F(x) = h(A(x)) + <c, x> + P(x)`.
//!
//! The crate provides the composite smooth part ([`losses`]), regularizers with
//! their proximal maps and inverse-subdifferential geometry ([`regularizers`]),
//! residual maps and optimality certificates ([`problem`]), a proximal gradient
//! solver ([`solver`]), and empirical error-bound probing ([`diagnostics`]).
//! Ready-made instances live in [`instances`].

pub mod diagnostics;
pub mod error;
pub mod instances;
pub mod losses;
pub mod problem;
pub mod regularizers;
pub mod solver;
pub mod space;

pub use error::{Error, Result};

//! Preconditioned heavy-ball and Nesterov methods for strongly convex,
//! smooth minimization, with diagonal scaling rules (AdaGrad, Adam-style
//! quadratic smoothing, OASIS-style linear smoothing) and numeric checks of
//! their convergence guarantees.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod error;
pub mod numerics;
pub mod objectives;
pub mod optimizers;
pub mod preconditioners;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

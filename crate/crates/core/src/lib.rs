//! Metropolis-adjusted Langevin sampling and optimization, random walk
//! Metropolis, regularity analysis of potentials, and desk-scale chain
//! diagnostics.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod regularity;
pub mod rng;
pub mod samplers;
pub mod targets;
pub mod vector;

pub use error::{Error, Result};

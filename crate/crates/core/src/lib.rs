//! Logarithmic double phase operators on piecewise-linear finite elements.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod energy;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod modular;
mod par;
pub mod phi;
pub mod rhs;
pub mod roots;
pub mod solvers;

pub use error::{LogdpError, Result};
pub use par::configure_threads_from_env;

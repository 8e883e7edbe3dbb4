//! Monte Carlo experiments, file formats and the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod stochastic;
pub mod tolerances;

pub use error::{LabError, Result};

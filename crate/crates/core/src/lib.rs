//! Numerical core for Brownian motion under the local-time ceiling `L_x(t) <= 1`.
//!
//! Densities on `[0,1]` are carried through their square root `g`, the
//! constrained Euler-Lagrange problems are solved by series-seeded shooting,
//! and the speed constants are read off the tabulated rate curve `J`.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod measures;
pub mod ode;
pub mod specfun;
pub mod speeds;
pub mod variational;

pub use error::{Error, Result};
pub use measures::{DensityGrid, MeasureStats};
pub use specfun::SampledFunction;
pub use speeds::{PathSpec, SpeedConstants};
pub use variational::{RateRow, RateTable, Solver, VariationalSolution};

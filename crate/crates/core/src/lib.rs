//! Front tracking for two-dimensional steady non-isentropic Euler flow past a
//! convex corner bounded by static gas.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration and the command
//! line live in the `cornerflow` crate.
#![no_std]
// `num_traits::Float` goes unused whenever std is linked elsewhere in the build.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod gas;
pub mod glimm;
pub mod ode;
pub mod riemann;
pub mod roots;
pub mod tracking;
pub mod validate;
pub mod waves;

pub use error::{Error, Result};
pub use gas::{EigenStructure, GasParams, GasState};

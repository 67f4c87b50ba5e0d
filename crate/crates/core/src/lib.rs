//! Kinetic-limit laboratory: the Boltzmann collision machinery, compressible
//! Euler and acoustic solvers, and a sweep harness that measures how kinetic
//! solutions approach their fluid limits.

pub mod collision;
pub mod error;
pub mod fluid;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod maxwellian;

pub use error::{Error, Result};

//! Polytropic stars, their radial Euler-Poisson operators and spectra.

pub mod discretization;
pub mod dynamics;
pub mod eigensolver;
pub mod equilibrium;
pub mod error;

pub use error::{Error, Result};
pub mod operators;
pub mod verification;

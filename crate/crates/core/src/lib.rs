//! Exact additive and higher energies of finite subsets of `Z^d`, certified
//! verification of the sharp cube exponents, the coefficient sign analysis
//! behind them, and numerical estimates of discrete extension constants.

pub mod certified;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod extension;
pub mod lattice;
pub mod legendre;
pub mod report;

pub use error::{Error, Result};

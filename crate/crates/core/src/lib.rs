//! Dependence structure of bivariate discrete distributions.
//!
//! A finite table is split into its margins and a margin-free part, the
//! copula pmf, obtained by rescaling rows and columns to uniform margins.
//! The copula pmf can then be recoupled with any other margins.

pub mod bernoulli;
pub mod dependence;
pub mod error;
pub mod families;
pub mod flow;
pub mod infinite;
pub mod pmf;
mod quadrature;
pub mod scaling;
pub mod viz;

pub use error::{Error, Result};

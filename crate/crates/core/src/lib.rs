//! Goodness-of-fit testing for count time series based on probability
//! generating functions.
//!
//! A series is fitted under a semiparametric null (Poisson INAR(1), INAR(2)
//! or INARCH(1)) by conditional least squares, the weighted L2 distance between
//! the empirical PGF and the null-implied PGF estimate is computed, and its
//! null distribution is approximated by a parametric bootstrap.

pub mod bootstrap;
pub mod error;
pub mod estimate;
pub mod mc;
pub mod models;
pub mod numeric;
pub mod pgf;
pub mod statistic;

pub use error::{Error, Result};

//! Numerical laboratory for small-data blow-up of critical homogeneous NLS.

pub mod error;
pub mod harness;
pub mod initial_data;
pub mod lifespan;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;
pub mod spacetime;
pub mod spectral;
pub mod testfunc;

pub use error::{Error, Result};

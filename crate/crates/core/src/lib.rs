pub mod collision;
pub mod driver;
pub mod error;
pub mod evolve;
pub mod geometry;
pub mod kernels;
pub mod nearsing;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};

//! Angular bispectrum statistics of Gaussian isotropic spherical random fields.

pub mod bispectrum;
pub mod diagrams;
pub mod error;
pub mod fieldsim;
pub mod montecarlo;
pub mod precision;
pub mod wigner;

pub use error::{Error, Result};

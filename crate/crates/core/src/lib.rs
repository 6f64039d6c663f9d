//! Closed-form annulus Stokes objects, correctors, particle clouds and
//! desk-scale solvers for the Brinkman mean-field limit of a Stokes flow
//! around many small spheres.

pub mod annulus;
pub mod cloud;
pub mod correctors;
pub mod domain;
pub mod error;
pub mod fd;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod measure_limits;
pub mod num;
pub mod quadrature;
pub mod reflections;
pub mod spatial;

pub use error::{Error, Result};
pub use num::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Vector = linalg::Vec3<f64>;
pub type Matrix = linalg::Mat3<f64>;
pub type Coefficients = annulus::AnnulusCoefficients<f64>;
pub type Scaled = annulus::ScaledCoefficients<f64>;

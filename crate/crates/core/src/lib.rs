//! Scalar free-contour Riemann–Hilbert solver for the semiclassical focusing
//! NLS equation with `sech` initial data and phase parameter `mu`.

pub mod analysis;
pub mod config;
pub mod continuation;
pub mod contour;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod modulation;
pub mod params;
pub mod polygon;
pub mod quadrature;
pub mod radical;
pub mod rhp;
pub mod runner;
pub mod scattering;
pub mod selftest;

pub use error::{Result, RhpError};
pub use num_complex::Complex64;
pub use params::{ProblemParams, Side, Tolerances};

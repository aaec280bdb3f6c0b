pub mod abel_jacobi;
pub mod checks;
pub mod config;
pub mod error;
pub mod instances;
pub mod neumann;
pub mod ode;
pub mod poly;
pub mod report;
pub mod riemann;
pub mod rng;
pub mod runner;
pub mod surface;
pub mod symplectic;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;

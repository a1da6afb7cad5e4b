//! Spectral solvers for semi-linear Beltrami equations and the anisotropic
//! semi-linear Poisson-type equations they factor.

pub mod anisotropic;
pub mod beltrami;
pub mod builtins;
pub mod cli;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod interp;
pub mod io;
pub mod ops;
pub mod semilinear;
pub mod transforms;

pub use error::{Error, Result};
pub use field::{ComplexField, RealField};
pub use grid::Grid;

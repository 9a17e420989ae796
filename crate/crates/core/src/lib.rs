//! Spectral analysis of `-psi'' + (V(x) - k^2) psi = 0` on `[-pi, pi]` with
//! Dirichlet conditions and complex, PT-symmetric potentials `V`.
//!
//! The pipeline is: parse a potential, shoot from `x = -pi`, locate and classify
//! the zeros of `D(k) = psi(pi, k)`, build eigenfunctions and associated
//! functions, orthonormalise them with respect to the bilinear form and test
//! completeness of the resulting basis.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod modes;
pub mod ode;
pub mod potential;
pub mod shooting;
pub mod spectrum;

pub use error::{Error, Result};

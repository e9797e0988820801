//! Hybrid radial-basis-function / spherical-polynomial interpolation on the
//! unit sphere, with a block-diagonal preconditioned MINRES solver for the
//! resulting saddle-point system.
//!
//! The interpolant is `u + p`, where `u = sum_j alpha_j phi(., x_j)` is a
//! Wendland kernel expansion over the data sites and `p` is a spherical
//! polynomial of degree at most `L`. The coefficients solve
//!
//! ```text
//! [ A   Q ] [alpha]   [f_X]
//! [ Q^T 0 ] [beta ] = [ 0 ]
//! ```
//!
//! which is preconditioned by `diag(Ahat, Lambda_L)`: an additive Schwarz
//! approximation of `A` and the diagonal of inverse Fourier-Legendre
//! coefficients of the kernel.

pub mod analysis;
pub mod assembly;
pub mod dense;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod harmonics;
pub mod kernels;
pub mod minres;
pub mod precond;
pub mod quadrature;
pub mod sphere_points;

pub use error::{Error, Result};

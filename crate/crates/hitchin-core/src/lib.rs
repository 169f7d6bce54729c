//! Spectral curves of Hitchin-type integrable systems on hyperelliptic
//! curves for the classical Lie series A, B and C.
//!
//! The crate builds the family of spectral curves
//! `R(x, y, lambda) = lambda^n + sum_i r_i(x, y) lambda^(n - d_i) = 0`
//! over a base curve `y^2 = P(x)`, recovers the Hamiltonians from point
//! configurations, computes angle coordinates as path integrals on the
//! spectral curve, and certifies integrability (commuting Hamiltonians)
//! and the Darboux property by finite-difference Poisson brackets.
//!
//! Module map:
//! - [`lie`]: invariant degrees and dimensions of A_l, B_l, C_l
//! - [`curve`]: the base curve, branch points, y-sheet continuation
//! - [`family`]: coefficient monomial bases and the spectral polynomial
//! - [`action`]: Hamiltonian recovery (linear solve) and configuration sampling
//! - [`geometry`]: holomorphic differentials, path continuation, angle coordinates
//! - [`dynamics`]: finite-difference Poisson brackets and the verification suites
//! - [`roots`], [`quadrature`]: numerical kernels (polynomial roots, adaptive
//!   Gauss-Kronrod integration)

pub mod action;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod geometry;
pub mod lie;
pub mod quadrature;
pub mod roots;
pub mod serde_util;

pub use error::{Error, Result};
pub use num_complex::Complex64;

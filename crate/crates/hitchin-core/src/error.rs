//! Error type shared by the whole crate.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Rank outside the supported range for the requested series.
    #[error("invalid rank {rank} for series {series}: {reason}")]
    InvalidRank {
        series: &'static str,
        rank: u32,
        reason: String,
    },

    /// Series D and the exceptional algebras are rejected at construction.
    #[error("unsupported Lie series {0:?}: only A, B and C are handled")]
    UnsupportedSeries(String),

    /// Curve polynomial has (nearly) coincident roots or a bad degree.
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    /// Polynomial root iteration failed to reach the residual target.
    #[error("root solve failed: {0}")]
    RootSolveFailure(String),

    /// A continuation step could not decide between the two y-sheets.
    #[error("sheet ambiguity near x = {x}: step too close to a branch point")]
    SheetAmbiguity { x: Complex64 },

    /// Two lambda-roots of the spectral polynomial approach each other
    /// along a continuation step.
    #[error("lambda-root collision near x = {x}: path passes too close to spectral ramification")]
    LambdaCollision { x: Complex64 },

    /// y = 0 where the on-curve derivative needs 1/y.
    #[error("evaluation on a branch point (y = 0) at x = {x}")]
    OnBranchPoint { x: Complex64 },

    /// Differential evaluated where R'_lambda or y is below tolerance.
    #[error("evaluation on a ramification point at x = {x} (|R'_lambda| = {r_lambda:.3e}, |y| = {y_abs:.3e})")]
    OnRamification {
        x: Complex64,
        r_lambda: f64,
        y_abs: f64,
    },

    /// Collocation matrix condition number above the cap; the configuration
    /// does not determine a unique spectral curve.
    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    /// Iterative process ran out of subdivisions or iterations.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Adaptive quadrature could not meet the error target.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// A finite-difference perturbation changed the deterministic path
    /// policy (detour set or sheet selection); the step must shrink.
    #[error("path instability: {0}")]
    PathInstability(String),

    /// An observable could not be evaluated at a stencil point.
    #[error("stencil failure: {0}")]
    StencilFailure(String),

    /// Inputs that violate a documented precondition (sizes, tolerances...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Arbitrary-precision eigensolver for the Dirichlet Sturm-Liouville problem
//! with a polynomial potential, based on the functional-discrete (FD) method
//! with a piecewise-constant base potential.
//!
//! The solver expands an eigenpair as a series of corrections around a "basic"
//! problem whose potential is piecewise constant on a mesh. Each correction is
//! held symbolically as coefficients in the basis `x^p sin(kappa x)`,
//! `x^p cos(kappa x)` per subinterval, so every step of the recursion and every
//! integral is evaluated in closed form at the working precision.
//!
//! Entry points: [`driver::run_fd`] for a full rank-`m` run,
//! [`verify::oracle_eigenvalue`] for reference eigenvalues computed on fine
//! meshes with Richardson extrapolation, and the modules below for the
//! individual building blocks.

pub mod basic_problem;
pub mod corrections;
pub mod driver;
mod linalg;
pub mod potential_mesh;
pub mod scalars;
pub mod trig_integrals;
mod trigpoly;
pub mod verify;

pub use rug::{Complex, Float};

pub use basic_problem::BasicEigenpair;
pub use driver::{eval_approx, run_fd, FDResult, ProblemConfig, Theorem1Bounds};
pub use potential_mesh::{BasePolicy, BasePotential, Mesh, PolynomialPotential};
pub use scalars::{Kappa, PrecisionContext};
pub use verify::{quadrature_check, residual_norm, ReferenceSource, ResidualReport};

/// Errors reported by the solver modules.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// `lambda - qbar_i` fell within tolerance of zero; the method excludes
    /// basic eigenvalues equal to a base-potential value.
    #[error("degenerate kappa: |lambda - qbar| = {difference} is below tolerance")]
    DegenerateKappa { difference: Float },

    /// A candidate root of the characteristic determinant coincides with a
    /// base-potential value.
    #[error("candidate eigenvalue {lambda} coincides with base potential value on subinterval {interval}")]
    DegenerateRoot { lambda: Float, interval: usize },

    /// The eigenvalue scan hit its upper cap before isolating the requested root.
    #[error("root {index} not bracketed while scanning up to lambda = {scanned_up_to}")]
    RootNotBracketed { index: usize, scanned_up_to: Float },

    /// The singular matrix had more than a one-dimensional null space
    /// (multiple eigenvalue, outside the method's assumptions).
    #[error("numerical rank {rank} lower than expected {expected}; eigenvalue may be multiple")]
    RankDeficiency { rank: usize, expected: usize },

    /// A null direction had a vanishing L2 norm.
    #[error("function norm below tolerance; cannot normalize")]
    ZeroNorm,

    /// The right-hand side of a correction layer violated the solvability
    /// condition (orthogonality to the adjoint null vector).
    #[error("solvability violated: |Z^T H| = {magnitude} exceeds tolerance")]
    SolvabilityViolation { magnitude: Float },

    /// A value that must be real carried an imaginary part above tolerance.
    #[error("cannot coerce complex to real: |imag| = {imag_magnitude} exceeds tolerance")]
    CoercionFailure { imag_magnitude: Float },

    /// Evaluation point outside the problem interval.
    #[error("evaluation point {x} outside the problem interval")]
    OutOfDomain { x: Float },

    /// An iterative oracle (quadrature, Richardson extrapolation) failed to
    /// reach the requested tolerance.
    #[error("no convergence in {what}: error estimate stalled at {estimate}")]
    NoConvergence { what: &'static str, estimate: Float },

    /// Invalid problem description.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Stochastic collocation for 2D magnetostatics with uncertain material laws.
//!
//! The library covers the full pipeline from measured B-H data to statistics
//! of the magnetic potential:
//!
//! * [`material`] builds monotone material laws `f` (and reluctivities
//!   `nu(s) = f(s)/s`) from measured tables, rational saturation models or
//!   power laws, together with the differential reluctivity tensors needed
//!   by Newton-type linearizations.
//! * [`kl`] discretizes a random B-H curve by a truncated Karhunen-Loeve
//!   expansion in a C^1 cubic spline space, including the amplitude bound
//!   that keeps every trajectory monotone.
//! * [`grids`] provides Gauss-Legendre collocation grids on boxes, both full
//!   tensor and Smolyak sparse constructions, with expectation, variance and
//!   polynomial interpolation over the grid points.
//! * [`fem`] contains the P1 triangular finite element kernel: structured
//!   meshes of the unit square and an L-shaped domain, uniform refinement,
//!   linearized operator assembly and a direct sparse solver.
//! * [`solver`] iterates the nonlinear magnetostatic problem with the
//!   Kacanov or Newton scheme and solves first-order parameter sensitivities.
//! * [`study`] runs collocation studies (one nonlinear solve per grid point)
//!   and tabulates stochastic convergence errors.
//! * [`config`] and [`io`] hold the flat key-value run configuration and the
//!   CSV formats shared by the command line driver and the examples.

pub mod config;
pub mod fem;
pub mod grids;
pub mod io;
pub mod kl;
pub mod material;
pub mod solver;
pub mod study;

/// Crate-wide error type. Variants map onto the process exit codes used by
/// the `ferrouq` binary: config errors exit 2, data validation errors exit 3,
/// convergence failures exit 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad or contradictory run configuration (unknown key, invalid value).
    #[error("config error: {0}")]
    Config(String),
    /// Input data fails validation (non-monotone table, malformed CSV, ...).
    #[error("data error: {0}")]
    Data(String),
    /// An iterative method exhausted its budget without meeting tolerance.
    #[error("convergence failure: {0}")]
    NoConvergence(String),
    /// The requested operation is undefined for the given law or inputs.
    #[error("capability error: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

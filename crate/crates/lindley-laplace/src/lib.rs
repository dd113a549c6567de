//! Exact finite-time distributions of a Lindley process with Laplace jumps.
//!
//! The process is `W_n = max(0, W_{n-1} + Z_n)`, `W_0 = x >= 0`, where the
//! increments `Z_n` are i.i.d. Laplace with location `mu` and scale `sigma`.
//! This crate computes, in closed form and for any finite `n`:
//!
//! * the mixed law of `W_n` — an atom at zero plus a piecewise
//!   exponential-polynomial density on `(0, inf)` ([`density`]);
//! * the distribution of the first exit time from `[0, h]` ([`fet`]);
//! * the run-length distribution of a CUSUM detector driven by Laplace
//!   observations, which reduces to the same machinery ([`cusum`]).
//!
//! Every closed form is backed by an independent oracle ([`oracle`]): a
//! reproducible Monte-Carlo simulator of the recursion and deterministic
//! grid quadrature of the defining integral equations. The `lindley`
//! binary exposes the tables as CSV/JSON.

pub mod compare;
pub mod cusum;
pub mod density;
pub mod fet;
pub mod gammainc;
mod kernel;
pub mod model;
pub mod oracle;
pub mod report;

pub use model::{
    dispatch_fet_regime, dispatch_position_regime, ExpPolySegment, FetDistribution, FetRegime,
    LaplaceParams, MixedDensity, PositionRegime, ProcessConfig,
};

/// Errors shared across the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A constructor or operation precondition was violated.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An evaluation point lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stepper was fed a state built under a different regime.
    #[error("regime mismatch: expected {expected}, got {got}")]
    RegimeMismatch { expected: String, got: String },
    /// A numerical invariant failed (mass defect, non-convergent tail, ...).
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, propagation, and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    /// A sampled quantity does not match the grid it is paired with.
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Grid parameters violate a construction invariant.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// An axial coordinate lies outside the interval a timeline covers.
    #[error("axial coordinate {z} outside [{z0}, {z1}]")]
    AxialOutOfRange { z: f64, z0: f64, z1: f64 },

    /// An interpolation target lies outside the source interval.
    #[error("interpolation node {node} outside source interval [{lo}, {hi}]")]
    NodeOutOfRange { node: f64, lo: f64, hi: f64 },

    /// The lowest eigenvalue is not below the potential's asymptotic level,
    /// so the operator has no bound ground state on this grid.
    #[error("no bound state: lowest eigenvalue {lambda:.6e} is not below the asymptotic potential level {asymptote:.6e}")]
    NoBoundState { lambda: f64, asymptote: f64 },

    /// A target profile changes sign inside its supported region; a ground
    /// state is nodeless, so the inverse design is ill-posed.
    #[error("target changes sign inside the supported region near index {index}")]
    TargetSignChange { index: usize },

    /// A propagated field stopped being finite.
    #[error("non-finite field value detected at step {step}")]
    NonFinite { step: usize },

    /// An iterative refinement moved uphill repeatedly and was aborted.
    #[error("misfit increased for {count} consecutive steps (last misfit {misfit:.6e}); aborting refinement")]
    Diverged { count: usize, misfit: f64 },

    /// Configuration values violate a documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A dense linear solve failed; indicates a singular collocation matrix.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

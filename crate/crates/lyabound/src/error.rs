//! Crate-wide error type.

/// Everything that can go wrong when constructing or analyzing a system.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An off-diagonal entry is negative, so the matrix is not an ML-matrix.
    /// Reports the first violation in row-major order.
    #[error("not an ML-matrix: off-diagonal entry ({i},{j}) = {value} is negative")]
    NotMl { i: usize, j: usize, value: f64 },

    /// A matrix or vector entry is NaN or infinite.
    #[error("non-finite entry at position ({i},{j})")]
    NonFinite { i: usize, j: usize },

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An operation needs a larger matrix than was supplied.
    #[error("operation needs dimension >= 2, matrix has n = {n}")]
    DimensionError { n: usize },

    /// A pair index is out of range or not distinct.
    #[error("invalid index pair ({i},{j}) for dimension {n}: indices must be distinct and < n")]
    IndexError { i: usize, j: usize, n: usize },

    /// An interval `[lo, hi)` with `lo > hi`, or a non-finite endpoint.
    #[error("invalid range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },

    /// Neither power iteration nor bisection reached the tolerance.
    #[error("eigenvalue iteration did not converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    /// A transition-rate matrix with a negative off-diagonal entry or a
    /// nonzero row sum.
    #[error("invalid generator: row {row} sums to {sum}, expected 0")]
    InvalidGenerator { row: usize, sum: f64 },

    /// The support graph of the generator is not strongly connected, so no
    /// unique stationary distribution exists.
    #[error("mode-transition graph is not strongly connected")]
    ReducibleChain,

    /// The requested integration step is too coarse for the signal's period.
    #[error("step {step} too large for period {period} (must be <= period/16)")]
    StepTooLarge { step: f64, period: f64 },

    /// A period-map computation was requested for a non-periodic signal.
    #[error("signal is not periodic")]
    NotPeriodic,

    /// The period map has nonpositive spectral radius, so its growth rate is
    /// undefined.
    #[error("period map has nonpositive spectral radius {value}")]
    NonPositiveSpectralRadius { value: f64 },

    /// An entry is too far below zero to be attributed to roundoff.
    #[error("entry ({i},{j}) = {value} is below the cooperativity tolerance")]
    NotCooperative { i: usize, j: usize, value: f64 },

    /// A scalar parameter outside its documented domain (nonpositive horizon,
    /// zero checkpoints, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical safeguard tripped (ill-conditioned solve, residual above
    /// tolerance). Should not occur for validated inputs.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

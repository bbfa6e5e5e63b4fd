//! Growth rates of cooperative linear ODE systems, with certified lower
//! bounds.
//!
//! A time-varying linear system `x' = A(t) x` is *cooperative* when every
//! `A(t)` is an ML-matrix (Metzler matrix: nonnegative off-diagonal
//! entries). Such systems preserve the nonnegative cone, and their top
//! Lyapunov exponent — the almost-sure exponential growth rate of the
//! fundamental solution — admits entrywise lower bounds that need nothing
//! but averages of simple functions of the coefficients.
//!
//! The crate provides:
//!
//! * [`matrix`] / [`metzler`] — dense matrices, ML validation, the dominant
//!   eigenvalue `d(A)`, and the static lower bounds (Kolotilina-type,
//!   minimal row/column sums, pairwise).
//! * [`signal`] — coefficient drivers: constant, periodic, and
//!   Markov-switched matrix signals with reproducible jump paths.
//! * [`propagator`] — fundamental solutions as log-scaled products of
//!   matrix exponentials (piecewise-constant signals) or RK4 steps
//!   (continuous signals), overflow-free over long horizons.
//! * [`lyapunov`] — top-exponent estimation with convergence diagnostics.
//! * [`floquet`] — period maps and exponents of periodic signals.
//! * [`bounds`] — the averaged lower bounds and bound/exponent reports.

// Index-based loops in the matrix kernels mirror the i/j notation of the
// linear algebra they implement; iterator rewrites hide that structure.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod floquet;
pub mod lyapunov;
pub mod matrix;
pub mod metzler;
pub mod propagator;
pub mod rng;
pub mod signal;

pub use bounds::{
    best_bound, expectation_bound, time_average_bound, BestBound, BoundConfig, BoundKind,
    BoundReport, EvalChoice, EvalMode, ExponentParams, Margins,
};
pub use error::{Error, Result};
pub use floquet::{floquet_exponent, monodromy, Monodromy};
pub use lyapunov::{
    convergence_report, top_exponent_matrix, top_exponent_vector, Checkpoint, ConvergenceReport,
    LyapunovEstimate, DEFAULT_CHECKPOINTS,
};
pub use matrix::{SquareMatrix, Vector};
pub use metzler::{
    random_ml_matrix, FrobeniusBounds, MlMatrix, PairwiseBound, DEFAULT_EIG_MAX_ITER,
    DEFAULT_EIG_TOL,
};
pub use propagator::{
    default_step, expm, expm_scaled, propagate, solve_trajectory, ScaledMatrix, ScaledVector,
    Trajectory, DEFAULT_STEP,
};
pub use signal::{
    random_generator, sample_jump_path, Generator, JumpPath, MatrixSignal, PeriodicSampler,
    SignalSpec, StationaryDistribution,
};

// Compile and run every Rust snippet in the guide as a doc-test, so the
// book cannot drift from the API it documents. The CLI chapter lives with
// the `lyabound-cli` crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metzler.md")]
    mod metzler {}
    #[doc = include_str!("../../../book/src/static-bounds.md")]
    mod static_bounds {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/lyapunov.md")]
    mod lyapunov {}
    #[doc = include_str!("../../../book/src/floquet.md")]
    mod floquet {}
    #[doc = include_str!("../../../book/src/averaged-bounds.md")]
    mod averaged_bounds {}
}

//! Floquet analysis of periodic cooperative systems.
//!
//! For a `T`-periodic signal the flow over one period — the monodromy map
//! `P = U(T, 0)` — determines the top exponent exactly:
//! `lambda = ln(rho(P)) / T`. Cooperative flows make `P` entrywise
//! nonnegative, so its spectral radius is the dominant eigenvalue computed
//! by [`MlMatrix::dominant_eigenvalue`] and the exponent needs no complex
//! arithmetic.
//!
//! The monodromy is carried in scaled form ([`ScaledMatrix`]): the
//! represented map is `exp(log_scale) * P_unit`, so
//! `lambda = (log_scale + ln rho(P_unit)) / T` without ever materializing
//! growth that could overflow.

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::metzler::{MlMatrix, DEFAULT_EIG_MAX_ITER};
use crate::propagator::{propagate, ScaledMatrix};
use crate::signal::MatrixSignal;

/// The flow over one period of a periodic signal, in scaled form.
#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    map: ScaledMatrix,
    period: f64,
}

impl Monodromy {
    /// Wraps an externally computed period map.
    pub fn from_parts(map: ScaledMatrix, period: f64) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        Ok(Self { map, period })
    }

    /// The scaled period map.
    pub fn map(&self) -> &ScaledMatrix {
        &self.map
    }

    /// Unit factor of the period map.
    pub fn matrix(&self) -> &SquareMatrix {
        self.map.matrix()
    }

    /// Log-scale of the period map.
    pub fn log_scale(&self) -> f64 {
        self.map.log_scale()
    }

    /// The period.
    pub fn period(&self) -> f64 {
        self.period
    }
}

/// Integrates the flow over one period of a periodic signal.
///
/// Errors with [`Error::NotPeriodic`] for other signal kinds; `step` obeys
/// the same constraints as [`propagate`].
pub fn monodromy(signal: &MatrixSignal, step: f64) -> Result<Monodromy> {
    let period = signal.continuous_period().ok_or(Error::NotPeriodic)?;
    let map = propagate(signal, 0.0, period, step)?;
    Ok(Monodromy { map, period })
}

/// The Floquet (top Lyapunov) exponent `ln(rho(P)) / T` of a monodromy map.
///
/// The unit factor must be entrywise nonnegative up to integration noise:
/// entries below `-1e-12` are a hard [`Error::NotCooperative`] failure,
/// entries in `[-1e-12, 0)` are clamped to zero. A vanishing spectral
/// radius (impossible for a true flow map, which is invertible) errors
/// with [`Error::NonPositiveSpectralRadius`]. `tol` is the accuracy of the
/// spectral-radius computation.
pub fn floquet_exponent(m: &Monodromy, tol: f64) -> Result<f64> {
    let n = m.matrix().n();
    // Validate and clamp before the eigenvalue run.
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = m.matrix().get(i, j);
            if v < -1e-12 {
                return Err(Error::NotCooperative { i, j, value: v });
            }
            rows[i][j] = v.max(0.0);
        }
    }
    let p = MlMatrix::from_rows(rows)?;
    let rho = p.dominant_eigenvalue(tol, DEFAULT_EIG_MAX_ITER)?;
    if rho <= 0.0 {
        return Err(Error::NonPositiveSpectralRadius { value: rho });
    }
    Ok((m.log_scale() + rho.ln()) / m.period())
}

//! Flow maps of `x' = A(t) x` in a scaled representation.
//!
//! Over a horizon `t` the fundamental matrix grows like `e^{lambda t}`,
//! which overflows `f64` long before the horizons of interest. Everything
//! here therefore works with [`ScaledMatrix`] / [`ScaledVector`]: a unit
//! factor kept near Frobenius norm 1 plus a separate additive log-scale.
//! Renormalization happens after every composition step, so no intermediate
//! quantity can overflow regardless of the horizon.
//!
//! For piecewise-constant signals the propagator is a product of matrix
//! exponentials, one per constancy interval — exact up to the exponential
//! kernel's accuracy. The kernel shifts the diagonal first: for an
//! ML-matrix `A`, `B = A - sigma I` with `sigma = min_i a_ii` is entrywise
//! nonnegative, so its scaled-and-squared Taylor series involves only
//! additions and multiplications of nonnegative numbers. The computed unit
//! factors are entrywise nonnegative *exactly*, not just up to roundoff,
//! and the cone invariance of cooperative flows survives in floating point.
//!
//! Continuous (periodic) signals are integrated with classical RK4 on a
//! step snapped to divide the span, refusing steps that undersample the
//! period.

use crate::error::{Error, Result};
use crate::matrix::{SquareMatrix, Vector};
use crate::signal::MatrixSignal;

/// Default integration step for continuous signals.
pub const DEFAULT_STEP: f64 = 1e-2;

/// Taylor threshold: after scaling, the exponent has Frobenius norm at most
/// this, so the series gains a factor `<= 1/2` per term on top of `1/k!`.
const TAYLOR_THETA: f64 = 0.5;
const TAYLOR_MAX_TERMS: usize = 64;

/// Unit factor kept in this Frobenius-norm band between renormalizations.
const NORM_BAND_LO: f64 = 0.5;
const NORM_BAND_HI: f64 = 2.0;

/// A step suited to `signal`: periodic signals resolve the period with at
/// least 256 steps, capped at [`DEFAULT_STEP`]; piecewise-constant kinds
/// are integrated exactly, so the step is nominal.
pub fn default_step(signal: &MatrixSignal) -> f64 {
    match signal.continuous_period() {
        Some(period) => (period / 256.0).min(DEFAULT_STEP),
        None => DEFAULT_STEP,
    }
}

/// A matrix `exp(log_scale) * M` with the unit factor `M` kept near
/// Frobenius norm 1.
///
/// `log_scale` absorbs the growth that would overflow `f64`; the pair
/// represents flow maps faithfully at any horizon. The represented value
/// can be recovered with [`Self::materialize`] when it fits in `f64` range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    m: SquareMatrix,
    log_scale: f64,
}

impl ScaledMatrix {
    /// The identity flow map.
    pub fn identity(n: usize) -> Self {
        Self {
            m: SquareMatrix::identity(n),
            log_scale: 0.0,
        }
    }

    /// Wraps `m` at log-scale 0 and renormalizes.
    pub fn from_matrix(m: SquareMatrix) -> Self {
        let mut s = Self { m, log_scale: 0.0 };
        s.renormalize();
        s
    }

    /// The unit factor.
    pub fn matrix(&self) -> &SquareMatrix {
        &self.m
    }

    /// The additive log-scale.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.m.n()
    }

    /// `ln` of the Frobenius norm of the represented matrix.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.m.frobenius_norm().ln()
    }

    /// `ln` of entry `(i, j)` of the represented matrix; negative infinity
    /// for entries `<= 0`.
    pub fn ln_entry(&self, i: usize, j: usize) -> f64 {
        let v = self.m.get(i, j);
        if v > 0.0 {
            self.log_scale + v.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// The represented matrix, or an error when `exp(log_scale)` exceeds
    /// `f64` range. (Underflow toward zero is allowed silently.)
    pub fn materialize(&self) -> Result<SquareMatrix> {
        let factor = self.log_scale.exp();
        if factor.is_infinite() {
            return Err(Error::Numerical(format!(
                "matrix with log-scale {} exceeds f64 range",
                self.log_scale
            )));
        }
        Ok(self.m.scale(factor))
    }

    /// `later * earlier` (apply `earlier` first), renormalized.
    pub fn compose(later: &Self, earlier: &Self) -> Self {
        let mut s = Self {
            m: later.m.matmul(&earlier.m),
            log_scale: later.log_scale + earlier.log_scale,
        };
        s.renormalize();
        s
    }

    /// Relative Frobenius distance between the represented matrices,
    /// computed at aligned scales. Infinite when the scales are too far
    /// apart to compare in `f64`.
    pub fn relative_diff(&self, other: &Self) -> f64 {
        let d = self.log_scale - other.log_scale;
        if d.abs() > 700.0 {
            return f64::INFINITY;
        }
        let f = d.exp();
        let n = self.n();
        let mut diff2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let e = f * self.m.get(i, j) - other.m.get(i, j);
                diff2 += e * e;
            }
        }
        let denom = (f * self.m.frobenius_norm()).max(other.m.frobenius_norm());
        if denom == 0.0 {
            0.0
        } else {
            diff2.sqrt() / denom
        }
    }

    fn renormalize(&mut self) {
        let f = self.m.frobenius_norm();
        if f.is_finite() && f > 0.0 && !(NORM_BAND_LO..=NORM_BAND_HI).contains(&f) {
            self.log_scale += f.ln();
            self.m = self.m.scale(1.0 / f);
        }
    }

    fn advance_exp(&mut self, a: &SquareMatrix, h: f64) {
        let e = expm_scaled(&a.scale(h));
        self.m = e.m.matmul(&self.m);
        self.log_scale += e.log_scale;
        self.renormalize();
    }

    fn advance_rk4(&mut self, signal: &MatrixSignal, t: f64, h: f64) {
        let a1 = signal.sample(t).into_matrix();
        let a2 = signal.sample(t + 0.5 * h).into_matrix();
        let a4 = signal.sample(t + h).into_matrix();
        let k1 = a1.matmul(&self.m);
        let k2 = a2.matmul(&self.m.add(&k1.scale(0.5 * h)));
        let k3 = a2.matmul(&self.m.add(&k2.scale(0.5 * h)));
        let k4 = a4.matmul(&self.m.add(&k3.scale(h)));
        let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
        self.m = self.m.add(&incr.scale(h / 6.0));
        self.renormalize();
    }
}

/// A vector `exp(log_scale) * v` with the unit factor kept near 2-norm 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVector {
    v: Vector,
    log_scale: f64,
}

impl ScaledVector {
    /// Wraps `v` at log-scale 0 and renormalizes.
    pub fn from_vector(v: Vector) -> Self {
        let mut s = Self { v, log_scale: 0.0 };
        s.renormalize();
        s
    }

    /// The unit factor.
    pub fn vector(&self) -> &Vector {
        &self.v
    }

    /// The additive log-scale.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `ln` of the 2-norm of the represented vector.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.v.norm().ln()
    }

    /// `ln` of component `i`; negative infinity for components `<= 0`.
    pub fn ln_entry(&self, i: usize) -> f64 {
        let x = self.v.get(i);
        if x > 0.0 {
            self.log_scale + x.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `ln` of the component sum (for entrywise-positive states).
    pub fn ln_sum(&self) -> f64 {
        let s: f64 = self.v.as_slice().iter().sum();
        if s > 0.0 {
            self.log_scale + s.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn renormalize(&mut self) {
        let f = self.v.norm();
        if f.is_finite() && f > 0.0 && !(NORM_BAND_LO..=NORM_BAND_HI).contains(&f) {
            self.log_scale += f.ln();
            self.v = Vector::from(
                self.v.as_slice().iter().map(|x| x / f).collect::<Vec<_>>(),
            );
        }
    }

    fn advance_exp(&mut self, a: &SquareMatrix, h: f64) {
        let e = expm_scaled(&a.scale(h));
        self.v = Vector::from(e.m.matvec(self.v.as_slice()));
        self.log_scale += e.log_scale;
        self.renormalize();
    }

    fn advance_rk4(&mut self, signal: &MatrixSignal, t: f64, h: f64) {
        let a1 = signal.sample(t).into_matrix();
        let a2 = signal.sample(t + 0.5 * h).into_matrix();
        let a4 = signal.sample(t + h).into_matrix();
        let x = self.v.as_slice();
        let k1 = a1.matvec(x);
        let stage = |k: &[f64], w: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(xi, ki)| xi + w * ki).collect()
        };
        let k2 = a2.matvec(&stage(&k1, 0.5 * h));
        let k3 = a2.matvec(&stage(&k2, 0.5 * h));
        let k4 = a4.matvec(&stage(&k3, h));
        let new: Vec<f64> = (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        self.v = Vector::from(new);
        self.renormalize();
    }
}

/// `exp(a)` in scaled form; never overflows.
///
/// The diagonal is shifted by `sigma = min_i a_ii` before scaling and
/// squaring, and `sigma` is added back to the log-scale at the end. For
/// ML-matrices the shifted exponent is entrywise nonnegative, making the
/// whole computation cancellation-free: the returned unit factor is
/// entrywise nonnegative exactly.
pub fn expm_scaled(a: &SquareMatrix) -> ScaledMatrix {
    expm_scaled_tol(a, 0.0)
}

fn expm_scaled_tol(a: &SquareMatrix, tol: f64) -> ScaledMatrix {
    let n = a.n();
    let sigma = (0..n)
        .map(|i| a.get(i, i))
        .fold(f64::INFINITY, f64::min);
    let sigma = if sigma.is_finite() { sigma } else { 0.0 };
    let b = a.shift_diag(-sigma);
    let norm = b.frobenius_norm();
    if norm == 0.0 {
        return ScaledMatrix {
            m: SquareMatrix::identity(n),
            log_scale: sigma,
        };
    }
    let squarings = if norm <= TAYLOR_THETA {
        0
    } else {
        (norm / TAYLOR_THETA).log2().ceil() as i32
    };
    let t = b.scale(0.5f64.powi(squarings));
    // Truncated Taylor series of exp(t); terms decay at least like 2^-k/k!.
    let cutoff = (tol * 0.01).max(1e-17);
    let mut sum = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=TAYLOR_MAX_TERMS {
        term = term.matmul(&t).scale(1.0 / k as f64);
        sum = sum.add(&term);
        if term.frobenius_norm() <= cutoff * sum.frobenius_norm() {
            break;
        }
    }
    let mut result = ScaledMatrix {
        m: sum,
        log_scale: 0.0,
    };
    result.renormalize();
    for _ in 0..squarings {
        result.log_scale *= 2.0;
        result.m = result.m.matmul(&result.m);
        result.renormalize();
    }
    result.log_scale += sigma;
    result
}

/// `exp(a)` as a plain matrix, accurate to a relative tolerance of at most
/// `tol` (the kernel usually reaches machine precision regardless). Errors
/// when the result exceeds `f64` range; use [`expm_scaled`] for flows over
/// long horizons.
pub fn expm(a: &SquareMatrix, tol: f64) -> Result<SquareMatrix> {
    if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    expm_scaled_tol(a, tol).materialize()
}

/// Internal time-stepping state: advanced exactly through constancy
/// intervals or by one RK4 step through continuous coefficients.
trait FlowState: Clone {
    fn advance_exp(&mut self, a: &SquareMatrix, h: f64);
    fn advance_rk4(&mut self, signal: &MatrixSignal, t: f64, h: f64);
}

impl FlowState for ScaledMatrix {
    fn advance_exp(&mut self, a: &SquareMatrix, h: f64) {
        ScaledMatrix::advance_exp(self, a, h);
    }
    fn advance_rk4(&mut self, signal: &MatrixSignal, t: f64, h: f64) {
        ScaledMatrix::advance_rk4(self, signal, t, h);
    }
}

impl FlowState for ScaledVector {
    fn advance_exp(&mut self, a: &SquareMatrix, h: f64) {
        ScaledVector::advance_exp(self, a, h);
    }
    fn advance_rk4(&mut self, signal: &MatrixSignal, t: f64, h: f64) {
        ScaledVector::advance_rk4(self, signal, t, h);
    }
}

fn validate_walk(t0: f64, t1: f64, step: f64, obs: &[f64]) -> Result<()> {
    if !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(Error::InvalidParameter(format!(
            "invalid time interval [{t0}, {t1}]"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    debug_assert!(
        obs.windows(2).all(|w| w[0] < w[1])
            && obs.iter().all(|&t| t > t0 && t <= t1),
        "observation times must be strictly increasing within ({t0}, {t1}]"
    );
    Ok(())
}

/// Event loop shared by matrix and vector flows: exact exponential steps
/// per constancy interval for piecewise-constant signals, RK4 on a snapped
/// grid for continuous ones; both split at observation times and invoke the
/// callback there.
fn walk<S: FlowState>(
    mut state: S,
    signal: &MatrixSignal,
    t0: f64,
    t1: f64,
    step: f64,
    obs: &[f64],
    mut on_obs: impl FnMut(f64, &S),
) -> Result<S> {
    validate_walk(t0, t1, step, obs)?;
    let mut oi = 0usize;
    if let Some(segments) = signal.piecewise_segments(t0, t1) {
        for (s0, s1, a) in segments {
            let am = a.as_matrix();
            let mut t = s0;
            while t < s1 {
                let target = if oi < obs.len() && obs[oi] < s1 {
                    obs[oi]
                } else {
                    s1
                };
                if target > t {
                    state.advance_exp(am, target - t);
                }
                t = target;
                while oi < obs.len() && obs[oi] == t {
                    on_obs(t, &state);
                    oi += 1;
                }
            }
        }
    } else {
        let period = signal
            .continuous_period()
            .expect("non-piecewise signals are periodic");
        if step > period / 16.0 {
            return Err(Error::StepTooLarge { step, period });
        }
        let len = t1 - t0;
        if len > 0.0 {
            let nsteps = (len / step).ceil().max(1.0);
            if nsteps > 1e12 {
                return Err(Error::InvalidParameter(format!(
                    "interval of length {len} at step {step} needs {nsteps} steps"
                )));
            }
            let nsteps_u = nsteps as u64;
            let h = len / nsteps;
            let mut t = t0;
            let mut k = 0u64;
            while t < t1 {
                let grid_next = if k + 1 >= nsteps_u {
                    t1
                } else {
                    (t0 + (k as f64 + 1.0) * h).min(t1)
                };
                let target = if oi < obs.len() && obs[oi] < grid_next {
                    obs[oi]
                } else {
                    grid_next
                };
                if target > t {
                    state.advance_rk4(signal, t, target - t);
                }
                t = target;
                while oi < obs.len() && obs[oi] == t {
                    on_obs(t, &state);
                    oi += 1;
                }
                if t == grid_next {
                    k += 1;
                }
            }
        }
    }
    Ok(state)
}

pub(crate) fn walk_matrix(
    signal: &MatrixSignal,
    t0: f64,
    t1: f64,
    step: f64,
    obs: &[f64],
    on_obs: impl FnMut(f64, &ScaledMatrix),
) -> Result<ScaledMatrix> {
    walk(
        ScaledMatrix::identity(signal.n()),
        signal,
        t0,
        t1,
        step,
        obs,
        on_obs,
    )
}

pub(crate) fn walk_vector(
    signal: &MatrixSignal,
    t0: f64,
    x0: &Vector,
    t1: f64,
    step: f64,
    obs: &[f64],
    on_obs: impl FnMut(f64, &ScaledVector),
) -> Result<ScaledVector> {
    if x0.dim() != signal.n() {
        return Err(Error::DimensionMismatch {
            expected: signal.n(),
            found: x0.dim(),
        });
    }
    walk(
        ScaledVector::from_vector(x0.clone()),
        signal,
        t0,
        t1,
        step,
        obs,
        on_obs,
    )
}

/// The flow map `U(t1, t0)` of `x' = A(t) x` in scaled form.
///
/// `step` governs RK4 integration of continuous signals (and must not
/// exceed a sixteenth of the period); piecewise-constant signals are
/// integrated exactly, one exponential per constancy interval.
pub fn propagate(
    signal: &MatrixSignal,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<ScaledMatrix> {
    walk_matrix(signal, t0, t1, step, &[], |_, _| {})
}

/// A solved trajectory: scaled states at `times[0] = t0` through
/// `times.last() = t1`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<ScaledVector>,
    x0: Vector,
    signal: MatrixSignal,
}

impl Trajectory {
    /// Recorded times, starting at `t0`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Scaled states aligned with [`Self::times`].
    pub fn states(&self) -> &[ScaledVector] {
        &self.states
    }

    /// Number of recorded points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True for an empty record (never produced by [`solve_trajectory`]).
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The initial state.
    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    /// The driving signal.
    pub fn signal(&self) -> &MatrixSignal {
        &self.signal
    }
}

/// Integrates `x' = A(t) x` from `x(t0) = x0` to `t1`, recording `records`
/// evenly spaced states after `t0` (the record times are observation
/// points, so recording does not perturb the integration grid for
/// piecewise-constant signals — each constancy interval is still advanced
/// by exact exponentials).
pub fn solve_trajectory(
    signal: &MatrixSignal,
    t0: f64,
    x0: &Vector,
    t1: f64,
    step: f64,
    records: usize,
) -> Result<Trajectory> {
    if records == 0 {
        return Err(Error::InvalidParameter(
            "at least one record point is required".into(),
        ));
    }
    let len = t1 - t0;
    let mut obs: Vec<f64> = Vec::new();
    if len > 0.0 {
        for i in 1..=records {
            let t = t0 + len * (i as f64 / records as f64);
            obs.push(t.min(t1));
        }
        *obs.last_mut().unwrap() = t1;
        obs.dedup();
    }
    let mut times = vec![t0];
    let mut states = vec![ScaledVector::from_vector(x0.clone())];
    walk_vector(signal, t0, x0, t1, step, &obs, |t, sv| {
        times.push(t);
        states.push(sv.clone());
    })?;
    Ok(Trajectory {
        times,
        states,
        x0: x0.clone(),
        signal: signal.clone(),
    })
}

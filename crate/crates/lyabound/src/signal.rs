//! Time-varying coefficient drivers.
//!
//! A [`MatrixSignal`] is the map `t -> A(t)` feeding the linear system
//! `x' = A(t) x`. Three kinds are supported:
//!
//! * **Constant** — autonomous systems.
//! * **Periodic** — `A(t + T) = A(t)`, given either in closed form or as a
//!   uniform grid of snapshots with linear interpolation (ML-matrices are
//!   closed under convex combination, so interpolation stays ML).
//! * **Markov-switched** — a finite set of mode matrices driven by a
//!   continuous-time Markov chain with transition-rate matrix `Q`. The
//!   realized switching path ([`JumpPath`]) is a deterministic function of
//!   its seed: sojourn times are exponential draws via the inverse CDF and
//!   the successor mode is drawn from the off-diagonal rates.
//!
//! Signals are immutable descriptions; the only interior state is the jump
//! path's lazily extended cache, which is shared (and locked) so that a
//! shifted view of a signal replays the identical realization.
//!
//! `shift(s)` gives the time-shifted signal `t -> A(s + t)`. Shifts compose:
//! `shift(shift(sig, s), t)` samples like `shift(sig, s + t)`.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{solve, SquareMatrix};
use crate::metzler::MlMatrix;
use crate::rng::SplitMix64;

/// A validated transition-rate matrix: nonnegative off-diagonal rates and
/// zero row sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator(SquareMatrix);

impl Generator {
    /// Validates `q` as a transition-rate matrix.
    pub fn new(q: SquareMatrix) -> Result<Self> {
        let n = q.n();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "generator must have at least one mode".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let v = q.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if i != j && v < 0.0 {
                    return Err(Error::NotMl { i, j, value: v });
                }
            }
        }
        let scale = q.max_abs_entry().max(1.0);
        for i in 0..n {
            let sum = q.row_sum(i);
            if sum.abs() > 1e-9 * scale {
                return Err(Error::InvalidGenerator { row: i, sum });
            }
        }
        Ok(Self(q))
    }

    /// Number of modes.
    pub fn n(&self) -> usize {
        self.0.n()
    }

    /// The rate matrix itself.
    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    /// Rate of leaving mode `m` (`-q_mm`).
    pub fn exit_rate(&self, m: usize) -> f64 {
        -self.0.get(m, m)
    }

    /// Whether the support graph (edges where `q_ij > 0`) is strongly
    /// connected: everything is reachable from mode 0 and mode 0 is
    /// reachable from everything.
    fn strongly_connected(&self) -> bool {
        let n = self.n();
        let reach = |transposed: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let rate = if transposed {
                        self.0.get(j, i)
                    } else {
                        self.0.get(i, j)
                    };
                    if i != j && rate > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(false) && reach(true)
    }

    /// The unique stationary distribution `pi` with `pi Q = 0`, `sum pi = 1`.
    ///
    /// Solved directly: transpose the balance equations, replace the last
    /// equation by the normalization, and LU-solve (with one refinement
    /// pass). Errors with [`Error::ReducibleChain`] when the support graph
    /// is not strongly connected; the relative residual of the returned
    /// distribution is at most `1e-12`.
    pub fn stationary_distribution(&self) -> Result<StationaryDistribution> {
        let n = self.n();
        if !self.strongly_connected() {
            return Err(Error::ReducibleChain);
        }
        if n == 1 {
            return Ok(StationaryDistribution { pi: vec![1.0] });
        }
        // M pi = e_n where M is Q^T with its last row replaced by ones.
        let m = SquareMatrix::from_fn(n, |i, j| if i == n - 1 { 1.0 } else { self.0.get(j, i) });
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let mut pi = solve(&m, &b)?;
        // One round of iterative refinement tightens the residual.
        let mv = m.matvec(&pi);
        let r: Vec<f64> = b.iter().zip(&mv).map(|(bi, mi)| bi - mi).collect();
        if let Ok(dp) = solve(&m, &r) {
            for (p, d) in pi.iter_mut().zip(&dp) {
                *p += d;
            }
        }
        // Clamp roundoff-negative entries and renormalize.
        for p in pi.iter_mut() {
            if *p < 0.0 {
                if *p < -1e-9 {
                    return Err(Error::Numerical(format!(
                        "stationary solve produced negative mass {p}"
                    )));
                }
                *p = 0.0;
            }
        }
        let total: f64 = pi.iter().sum();
        for p in pi.iter_mut() {
            *p /= total;
        }
        let dist = StationaryDistribution { pi };
        let residual = dist.residual(self);
        if residual > 1e-12 * self.0.max_abs_entry().max(1.0) {
            return Err(Error::Numerical(format!(
                "stationary residual {residual} above tolerance"
            )));
        }
        Ok(dist)
    }
}

impl<'de> Deserialize<'de> for Generator {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let m = SquareMatrix::deserialize(deserializer)?;
        Generator::new(m).map_err(serde::de::Error::custom)
    }
}

/// A probability vector `pi` with `pi Q = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    /// Number of modes.
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    /// True when there are no modes (cannot occur for validated generators).
    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Mass of mode `m`.
    pub fn get(&self, m: usize) -> f64 {
        self.pi[m]
    }

    /// The masses.
    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    /// `max_j |(pi Q)_j|`, the balance residual.
    pub fn residual(&self, q: &Generator) -> f64 {
        let n = self.pi.len();
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| self.pi[i] * q.as_matrix().get(i, j))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
struct PathState {
    /// `times[k]` is when mode `modes[k]` becomes active; `times[0] = 0`.
    times: Vec<f64>,
    modes: Vec<usize>,
    rng: SplitMix64,
    absorbed: Option<usize>,
}

/// One realization of the switching chain, reproducible from its seed.
///
/// The path extends itself lazily: querying beyond the generated horizon
/// draws more jumps from the stored generator state, so a path extended to
/// time 10 and then 20 is identical to one extended straight to 20.
#[derive(Debug)]
pub struct JumpPath {
    seed: u64,
    initial_mode: usize,
    state: Mutex<PathState>,
}

impl JumpPath {
    /// A fresh path starting in `initial_mode` at time 0.
    pub fn new(seed: u64, initial_mode: usize) -> Self {
        Self {
            seed,
            initial_mode,
            state: Mutex::new(PathState {
                times: vec![0.0],
                modes: vec![initial_mode],
                rng: SplitMix64::new(seed),
                absorbed: None,
            }),
        }
    }

    /// The seed this realization replays.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The mode occupied at time 0.
    pub fn initial_mode(&self) -> usize {
        self.initial_mode
    }

    /// Extends the path until its last jump lies strictly beyond `t`.
    pub fn ensure_covered(&self, q: &Generator, t: f64) {
        let mut st = self.state.lock().unwrap();
        while st.absorbed.is_none() && *st.times.last().unwrap() <= t {
            let m = *st.modes.last().unwrap();
            let rate = q.exit_rate(m);
            if rate <= 0.0 {
                // Zero exit rate: the path stays in `m` forever. Flagged,
                // not fatal.
                st.absorbed = Some(m);
                break;
            }
            let dt = st.rng.exponential(rate);
            let t_next = st.times.last().unwrap() + dt;
            // Successor mode: mass q_mk / rate on each k != m.
            let u = st.rng.next_f64() * rate;
            let n = q.n();
            let mut cum = 0.0;
            let mut next = None;
            for k in 0..n {
                if k == m {
                    continue;
                }
                let r = q.as_matrix().get(m, k);
                if r > 0.0 {
                    cum += r;
                    next = Some(k);
                    if u < cum {
                        break;
                    }
                }
            }
            let next = next.expect("positive exit rate implies a positive off-diagonal rate");
            st.times.push(t_next);
            st.modes.push(next);
        }
    }

    /// The mode occupied at time `t >= 0` (right-continuous at jumps).
    pub fn mode_at(&self, q: &Generator, t: f64) -> usize {
        self.ensure_covered(q, t);
        let st = self.state.lock().unwrap();
        let idx = st.times.partition_point(|&jt| jt <= t);
        st.modes[idx - 1]
    }

    /// Constancy intervals `(start, end, mode)` covering `[t0, t1]`.
    pub fn segments(&self, q: &Generator, t0: f64, t1: f64) -> Vec<(f64, f64, usize)> {
        self.ensure_covered(q, t1);
        let st = self.state.lock().unwrap();
        let mut out = Vec::new();
        if t1 < t0 {
            return out;
        }
        let mut k = st.times.partition_point(|&jt| jt <= t0) - 1;
        loop {
            let start = st.times[k].max(t0);
            let end = if k + 1 < st.times.len() {
                st.times[k + 1].min(t1)
            } else {
                t1
            };
            if end > start || out.is_empty() {
                out.push((start, end.max(start), st.modes[k]));
            }
            if k + 1 >= st.times.len() || st.times[k + 1] >= t1 {
                break;
            }
            k += 1;
        }
        out
    }

    /// Snapshot of the jump times generated so far (`times[0] = 0`).
    pub fn jump_times(&self) -> Vec<f64> {
        self.state.lock().unwrap().times.clone()
    }

    /// Snapshot of the mode sequence, aligned with [`Self::jump_times`]:
    /// `mode_sequence()[k]` is active on `[times[k], times[k+1])`.
    pub fn mode_sequence(&self) -> Vec<usize> {
        self.state.lock().unwrap().modes.clone()
    }

    /// The absorbing mode, if the path ran into a zero exit rate.
    pub fn absorbing_mode(&self) -> Option<usize> {
        self.state.lock().unwrap().absorbed
    }
}

impl Clone for JumpPath {
    fn clone(&self) -> Self {
        Self {
            seed: self.seed,
            initial_mode: self.initial_mode,
            state: Mutex::new(self.state.lock().unwrap().clone()),
        }
    }
}

/// A random transition-rate matrix with every off-diagonal rate drawn
/// uniformly from `rate_range` (so the support graph is complete and the
/// chain irreducible). Deterministic in `seed`; rates are drawn row by row
/// in row-major order.
pub fn random_generator(
    modes: usize,
    seed: u64,
    rate_range: (f64, f64),
) -> Result<Generator> {
    if modes == 0 {
        return Err(Error::InvalidParameter(
            "generator must have at least one mode".into(),
        ));
    }
    let (lo, hi) = rate_range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi || lo <= 0.0 {
        return Err(Error::BadRange { lo, hi });
    }
    let mut rng = SplitMix64::new(seed);
    let mut rows = vec![vec![0.0; modes]; modes];
    for (m, row) in rows.iter_mut().enumerate() {
        let mut total = 0.0;
        for (k, v) in row.iter_mut().enumerate() {
            if k != m {
                *v = rng.uniform(lo, hi);
                total += *v;
            }
        }
        row[m] = -total;
    }
    Generator::new(SquareMatrix::from_rows(rows)?)
}

/// Samples a switching path for `q` from `seed`, pre-extended past
/// `horizon`. The path is a pure function of `(seed, initial_mode, q)`.
pub fn sample_jump_path(
    q: &Generator,
    seed: u64,
    initial_mode: usize,
    horizon: f64,
) -> Result<JumpPath> {
    if initial_mode >= q.n() {
        return Err(Error::IndexError {
            i: initial_mode,
            j: initial_mode,
            n: q.n(),
        });
    }
    if !horizon.is_finite() || horizon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be finite and nonnegative, got {horizon}"
        )));
    }
    let path = JumpPath::new(seed, initial_mode);
    path.ensure_covered(q, horizon);
    Ok(path)
}

/// Periodic coefficient source: closed form or interpolated snapshots.
#[derive(Clone)]
pub enum PeriodicSampler {
    /// `f(tau)` for `tau` in `[0, period)`; must return matrices of a fixed
    /// dimension.
    ClosedForm(Arc<dyn Fn(f64) -> MlMatrix + Send + Sync>),
    /// Uniform grid over `[0, period)`, wrapped linear interpolation.
    Grid(Arc<Vec<MlMatrix>>),
}

impl std::fmt::Debug for PeriodicSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ClosedForm(_) => f.write_str("ClosedForm(..)"),
            Self::Grid(g) => write!(f, "Grid({} samples)", g.len()),
        }
    }
}

/// The coefficient map `t -> A(t)` of a cooperative linear system.
#[derive(Debug, Clone)]
pub enum MatrixSignal {
    /// `A(t) = a`.
    Constant { a: MlMatrix },
    /// `A(t + period) = A(t)`; `phase` shifts the origin.
    Periodic {
        period: f64,
        phase: f64,
        n: usize,
        sampler: PeriodicSampler,
    },
    /// Mode matrices driven by a Markov jump path; `offset` shifts the
    /// origin along the same realization.
    MarkovSwitched {
        modes: Arc<Vec<MlMatrix>>,
        generator: Generator,
        path: Arc<JumpPath>,
        offset: f64,
    },
}

impl MatrixSignal {
    /// Constant signal.
    pub fn constant(a: MlMatrix) -> Self {
        Self::Constant { a }
    }

    /// Periodic signal from a closed-form sampler on `[0, period)`.
    pub fn periodic_closed_form(
        period: f64,
        f: impl Fn(f64) -> MlMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        let n = f(0.0).n();
        Ok(Self::Periodic {
            period,
            phase: 0.0,
            n,
            sampler: PeriodicSampler::ClosedForm(Arc::new(f)),
        })
    }

    /// Periodic signal from uniform snapshots over `[0, period)` with
    /// wrapped linear interpolation.
    pub fn periodic_grid(period: f64, samples: Vec<MlMatrix>) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter(
                "periodic grid needs at least one sample".into(),
            ));
        }
        let n = samples[0].n();
        for s in &samples {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.n(),
                });
            }
        }
        Ok(Self::Periodic {
            period,
            phase: 0.0,
            n,
            sampler: PeriodicSampler::Grid(Arc::new(samples)),
        })
    }

    /// Markov-switched signal with a fresh realization from `seed`.
    pub fn markov_switched(
        modes: Vec<MlMatrix>,
        generator: Generator,
        seed: u64,
        initial_mode: usize,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("no mode matrices".into()));
        }
        if modes.len() != generator.n() {
            return Err(Error::DimensionMismatch {
                expected: generator.n(),
                found: modes.len(),
            });
        }
        let n = modes[0].n();
        for m in &modes {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.n(),
                });
            }
        }
        if initial_mode >= modes.len() {
            return Err(Error::IndexError {
                i: initial_mode,
                j: initial_mode,
                n: modes.len(),
            });
        }
        Ok(Self::MarkovSwitched {
            modes: Arc::new(modes),
            generator,
            path: Arc::new(JumpPath::new(seed, initial_mode)),
            offset: 0.0,
        })
    }

    /// System dimension.
    pub fn n(&self) -> usize {
        match self {
            Self::Constant { a } => a.n(),
            Self::Periodic { n, .. } => *n,
            Self::MarkovSwitched { modes, .. } => modes[0].n(),
        }
    }

    /// The coefficient matrix at time `t` (right-continuous at switching
    /// times).
    pub fn sample(&self, t: f64) -> MlMatrix {
        match self {
            Self::Constant { a } => a.clone(),
            Self::Periodic {
                period,
                phase,
                sampler,
                ..
            } => {
                let tau = (phase + t).rem_euclid(*period);
                match sampler {
                    PeriodicSampler::ClosedForm(f) => f(tau),
                    PeriodicSampler::Grid(samples) => {
                        let g = samples.len();
                        let pos = tau / period * g as f64;
                        let k = (pos.floor() as usize).min(g - 1);
                        let w = (pos - k as f64).clamp(0.0, 1.0);
                        let a = samples[k].as_matrix();
                        let b = samples[(k + 1) % g].as_matrix();
                        let m = SquareMatrix::from_fn(a.n(), |i, j| {
                            (1.0 - w) * a.get(i, j) + w * b.get(i, j)
                        });
                        // Convex combinations of ML-matrices are ML.
                        MlMatrix::new(m).expect("interpolation of ML-matrices is ML")
                    }
                }
            }
            Self::MarkovSwitched {
                modes,
                generator,
                path,
                offset,
            } => modes[path.mode_at(generator, offset + t)].clone(),
        }
    }

    /// The time-shifted signal `t -> A(s + t)`, sharing the same
    /// realization. Shifting composes: shifting by `s` and then `t` samples
    /// like shifting by `s + t`. Markov-switched signals only shift
    /// forward (`s >= 0`).
    pub fn shift(&self, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("shift by {s}")));
        }
        match self {
            Self::Constant { .. } => Ok(self.clone()),
            Self::Periodic {
                period,
                phase,
                n,
                sampler,
            } => Ok(Self::Periodic {
                period: *period,
                phase: phase + s,
                n: *n,
                sampler: sampler.clone(),
            }),
            Self::MarkovSwitched {
                modes,
                generator,
                path,
                offset,
            } => {
                if s < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "Markov-switched signals shift forward only, got {s}"
                    )));
                }
                Ok(Self::MarkovSwitched {
                    modes: modes.clone(),
                    generator: generator.clone(),
                    path: path.clone(),
                    offset: offset + s,
                })
            }
        }
    }

    /// The period for continuous (periodic) signals, `None` for
    /// piecewise-constant kinds.
    pub(crate) fn continuous_period(&self) -> Option<f64> {
        match self {
            Self::Periodic { period, .. } => Some(*period),
            _ => None,
        }
    }

    /// Constancy intervals `(start, end, matrix)` covering `[t0, t1]`, or
    /// `None` for continuous signals.
    pub(crate) fn piecewise_segments(
        &self,
        t0: f64,
        t1: f64,
    ) -> Option<Vec<(f64, f64, MlMatrix)>> {
        match self {
            Self::Constant { a } => Some(vec![(t0, t1, a.clone())]),
            Self::Periodic { .. } => None,
            Self::MarkovSwitched {
                modes,
                generator,
                path,
                offset,
            } => Some(
                path.segments(generator, offset + t0, offset + t1)
                    .into_iter()
                    .map(|(s0, s1, m)| (s0 - offset, s1 - offset, modes[m].clone()))
                    .collect(),
            ),
        }
    }
}

/// Serializable description of a signal; see the guide's CLI chapter for
/// the field-by-field schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// `{"kind": "constant", "matrix": {...}}`
    Constant { matrix: MlMatrix },
    /// `{"kind": "periodic", "period": T, "samples": [{...}, ...]}`
    Periodic {
        period: f64,
        samples: Vec<MlMatrix>,
    },
    /// `{"kind": "markov", "modes": [...], "generator": {...}, "seed": s,
    /// "initial_mode": m}`
    Markov {
        modes: Vec<MlMatrix>,
        generator: Generator,
        seed: u64,
        initial_mode: usize,
    },
}

impl SignalSpec {
    /// System dimension.
    pub fn n(&self) -> usize {
        match self {
            Self::Constant { matrix } => matrix.n(),
            Self::Periodic { samples, .. } => samples.first().map_or(0, |s| s.n()),
            Self::Markov { modes, .. } => modes.first().map_or(0, |m| m.n()),
        }
    }

    /// Builds the signal, using the embedded seed for Markov realizations.
    pub fn realize(&self) -> Result<MatrixSignal> {
        match self {
            Self::Markov { seed, .. } => self.realize_with_seed(*seed),
            _ => self.realize_with_seed(0),
        }
    }

    /// Builds the signal with an explicit realization seed (replica runs
    /// override the embedded one). Constant and periodic signals ignore it.
    pub fn realize_with_seed(&self, seed: u64) -> Result<MatrixSignal> {
        match self {
            Self::Constant { matrix } => Ok(MatrixSignal::constant(matrix.clone())),
            Self::Periodic { period, samples } => {
                MatrixSignal::periodic_grid(*period, samples.clone())
            }
            Self::Markov {
                modes,
                generator,
                initial_mode,
                ..
            } => MatrixSignal::markov_switched(
                modes.clone(),
                generator.clone(),
                seed,
                *initial_mode,
            ),
        }
    }
}

//! Lower bounds on the top Lyapunov exponent, averaged along signals.
//!
//! Every static bound from [`crate::metzler`] is concave-friendly in the
//! right way: its time average (for deterministic signals) or stationary
//! expectation (for switched ones) still bounds the top exponent of the
//! time-varying flow from below. This module evaluates those averages:
//!
//! * exact segment sums for piecewise-constant signals,
//! * composite Simpson quadrature for continuous periodic ones (the
//!   integrands inherit the signal's smoothness; Simpson keeps quadrature
//!   error far below the comparison tolerances where trapezoid sums would
//!   not be at equality cases),
//! * stationary-weighted mode sums for switched systems.
//!
//! [`best_bound`] bundles all four bound kinds, picks the winner, and can
//! attach a finite-horizon exponent estimate with per-bound margins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::top_exponent_matrix;
use crate::metzler::{MlMatrix, PairwiseBound};
use crate::propagator::DEFAULT_STEP;
use crate::signal::{MatrixSignal, StationaryDistribution};

/// The four lower-bound families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundKind {
    /// Trace-plus-geometric-means bound, normalized by dimension.
    Kolotilina,
    /// Smallest row sum.
    FrobeniusMinRowSum,
    /// Smallest column sum.
    FrobeniusMinColSum,
    /// Two-state comparison bound for the pair `(i, j)`.
    Pairwise { i: usize, j: usize },
}

impl BoundKind {
    /// The bound evaluated on a single matrix.
    pub fn evaluate(&self, a: &MlMatrix) -> Result<f64> {
        match self {
            Self::Kolotilina => Ok(a.kolotilina_bound()),
            Self::FrobeniusMinRowSum => Ok(a.frobenius_bounds().min_row_sum),
            Self::FrobeniusMinColSum => Ok(a.frobenius_bounds().min_col_sum),
            Self::Pairwise { i, j } => a.pairwise_bound(*i, *j),
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Kolotilina => f.write_str("kolotilina"),
            Self::FrobeniusMinRowSum => f.write_str("min_row_sum"),
            Self::FrobeniusMinColSum => f.write_str("min_col_sum"),
            Self::Pairwise { i, j } => write!(f, "pairwise({i},{j})"),
        }
    }
}

/// Time average of `kind` along the signal over `[0, horizon]`.
///
/// Piecewise-constant signals are summed exactly segment by segment.
/// Continuous signals use composite Simpson quadrature with the step
/// snapped to divide the horizon (and the same step-versus-period guard as
/// the propagator).
pub fn time_average_bound(
    signal: &MatrixSignal,
    kind: BoundKind,
    horizon: f64,
    step: f64,
) -> Result<f64> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    if let Some(segments) = signal.piecewise_segments(0.0, horizon) {
        let mut total = 0.0;
        for (s0, s1, a) in segments {
            if s1 > s0 {
                total += (s1 - s0) * kind.evaluate(&a)?;
            }
        }
        Ok(total / horizon)
    } else {
        let period = signal
            .continuous_period()
            .expect("non-piecewise signals are periodic");
        if step > period / 16.0 {
            return Err(Error::StepTooLarge { step, period });
        }
        // Composite Simpson with an even number of intervals.
        let mut n = (horizon / step).ceil() as usize;
        n = n.max(2);
        if n % 2 == 1 {
            n += 1;
        }
        let h = horizon / n as f64;
        let f = |t: f64| kind.evaluate(&signal.sample(t));
        let mut acc = f(0.0)? + f(horizon)?;
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(h * k as f64)?;
        }
        Ok(acc * h / 3.0 / horizon)
    }
}

/// Stationary expectation of `kind` over the mode set.
pub fn expectation_bound(
    modes: &[MlMatrix],
    pi: &StationaryDistribution,
    kind: BoundKind,
) -> Result<f64> {
    if modes.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            found: modes.len(),
        });
    }
    let mut total = 0.0;
    for (a, &p) in modes.iter().zip(pi.as_slice()) {
        total += p * kind.evaluate(a)?;
    }
    Ok(total)
}

/// How [`best_bound`] should average the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalChoice {
    /// Constant signals evaluate statically, periodic ones average over a
    /// period, switched ones take the stationary expectation.
    #[default]
    Auto,
    /// Average along the realized signal over a horizon.
    TimeAverage,
    /// Stationary expectation (switched signals only).
    Expectation,
}

/// How the bounds in a report were evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalMode {
    /// Single-matrix values.
    Static,
    /// Averages over `[0, horizon]` of the realized signal.
    TimeAverage { horizon: f64 },
    /// Stationary expectations under `pi`.
    Expectation { pi: Vec<f64> },
}

/// Exponent-attachment request for [`best_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    /// Estimation horizon.
    pub horizon: f64,
    /// Integration step for continuous signals.
    pub step: f64,
    /// Number of checkpoints.
    pub checkpoints: usize,
}

/// Configuration for [`best_bound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Averaging mode.
    pub mode: EvalChoice,
    /// Averaging horizon; defaults to one period for periodic signals and
    /// is required for time-averaging switched ones.
    pub horizon: Option<f64>,
    /// Quadrature / integration step.
    pub step: f64,
    /// When set, also estimate the exponent and report margins.
    pub exponent: Option<ExponentParams>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            mode: EvalChoice::Auto,
            horizon: None,
            step: DEFAULT_STEP,
            exponent: None,
        }
    }
}

/// The winning bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestBound {
    /// Which family won.
    pub kind: BoundKind,
    /// Its value.
    pub value: f64,
}

/// `lambda_hat` minus each bound (positive margins mean the bound holds
/// with room to spare).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub kolotilina: f64,
    pub min_row_sum: f64,
    pub min_col_sum: f64,
    pub best_pairwise: Option<f64>,
}

/// All bound families evaluated under one averaging mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// How the values below were computed.
    pub eval_mode: EvalMode,
    pub kolotilina: f64,
    pub min_row_sum: f64,
    pub min_col_sum: f64,
    /// Row witness for the static mode (averages have no single witness).
    pub argmin_row: Option<usize>,
    /// Column witness for the static mode.
    pub argmin_col: Option<usize>,
    /// Best pair and value; `None` for one-dimensional systems.
    pub best_pairwise: Option<PairwiseBound>,
    /// The winner among the families above.
    pub best: BestBound,
    /// Finite-horizon exponent estimate, when requested.
    pub lambda_hat: Option<f64>,
    /// `lambda_hat` minus each bound, when requested.
    pub margins: Option<Margins>,
}

/// Evaluates all bound families on `signal` under `config`, picks the
/// best, and optionally attaches an exponent estimate with margins.
pub fn best_bound(signal: &MatrixSignal, config: &BoundConfig) -> Result<BoundReport> {
    let n = signal.n();
    // Resolve the averaging mode.
    enum Resolved {
        Static(MlMatrix),
        TimeAverage(f64),
        Expectation(Vec<MlMatrix>, StationaryDistribution),
    }
    let resolved = match (&config.mode, signal) {
        (_, MatrixSignal::Constant { a }) => Resolved::Static(a.clone()),
        (EvalChoice::Auto, MatrixSignal::Periodic { period, .. }) => {
            Resolved::TimeAverage(config.horizon.unwrap_or(*period))
        }
        (EvalChoice::TimeAverage, MatrixSignal::Periodic { period, .. }) => {
            Resolved::TimeAverage(config.horizon.unwrap_or(*period))
        }
        (EvalChoice::Expectation, MatrixSignal::Periodic { .. }) => {
            return Err(Error::InvalidParameter(
                "expectation averaging needs a switched signal".into(),
            ));
        }
        (EvalChoice::TimeAverage, MatrixSignal::MarkovSwitched { .. }) => {
            let horizon = config.horizon.ok_or_else(|| {
                Error::InvalidParameter(
                    "time-averaging a switched signal needs an explicit horizon".into(),
                )
            })?;
            Resolved::TimeAverage(horizon)
        }
        (
            EvalChoice::Auto | EvalChoice::Expectation,
            MatrixSignal::MarkovSwitched {
                modes, generator, ..
            },
        ) => {
            let pi = generator.stationary_distribution()?;
            Resolved::Expectation(modes.as_ref().clone(), pi)
        }
    };

    let avg = |kind: BoundKind| -> Result<f64> {
        match &resolved {
            Resolved::Static(a) => kind.evaluate(a),
            Resolved::TimeAverage(h) => time_average_bound(signal, kind, *h, config.step),
            Resolved::Expectation(modes, pi) => expectation_bound(modes, pi, kind),
        }
    };

    let kolotilina = avg(BoundKind::Kolotilina)?;
    let min_row_sum = avg(BoundKind::FrobeniusMinRowSum)?;
    let min_col_sum = avg(BoundKind::FrobeniusMinColSum)?;
    let (argmin_row, argmin_col) = match &resolved {
        Resolved::Static(a) => {
            let fb = a.frobenius_bounds();
            (Some(fb.argmin_row), Some(fb.argmin_col))
        }
        _ => (None, None),
    };
    let best_pairwise = if n >= 2 {
        let mut best: Option<PairwiseBound> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let value = avg(BoundKind::Pairwise { i, j })?;
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(PairwiseBound { value, i, j });
                }
            }
        }
        best
    } else {
        None
    };

    let mut best = BestBound {
        kind: BoundKind::Kolotilina,
        value: kolotilina,
    };
    for (kind, value) in [
        (BoundKind::FrobeniusMinRowSum, min_row_sum),
        (BoundKind::FrobeniusMinColSum, min_col_sum),
    ] {
        if value > best.value {
            best = BestBound { kind, value };
        }
    }
    if let Some(pb) = &best_pairwise {
        if pb.value > best.value {
            best = BestBound {
                kind: BoundKind::Pairwise { i: pb.i, j: pb.j },
                value: pb.value,
            };
        }
    }

    let (lambda_hat, margins) = match &config.exponent {
        Some(p) => {
            let est = top_exponent_matrix(signal, p.horizon, p.step, p.checkpoints)?;
            let lh = est.lambda_hat;
            let margins = Margins {
                kolotilina: lh - kolotilina,
                min_row_sum: lh - min_row_sum,
                min_col_sum: lh - min_col_sum,
                best_pairwise: best_pairwise.as_ref().map(|pb| lh - pb.value),
            };
            (Some(lh), Some(margins))
        }
        None => (None, None),
    };

    let eval_mode = match resolved {
        Resolved::Static(_) => EvalMode::Static,
        Resolved::TimeAverage(h) => EvalMode::TimeAverage { horizon: h },
        Resolved::Expectation(_, pi) => EvalMode::Expectation {
            pi: pi.as_slice().to_vec(),
        },
    };

    Ok(BoundReport {
        eval_mode,
        kolotilina,
        min_row_sum,
        min_col_sum,
        argmin_row,
        argmin_col,
        best_pairwise,
        best,
        lambda_hat,
        margins,
    })
}

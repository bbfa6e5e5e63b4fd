//! Running one experiment end to end: realize the signal, estimate the
//! exponent over replicas, evaluate the bounds, and compare.

use crate::config::{ConfigError, ExperimentConfig};
use lyabound::{
    best_bound, default_step, floquet_exponent, monodromy, top_exponent_matrix,
    top_exponent_vector, BoundConfig, BoundKind, BoundReport, Checkpoint, LyapunovEstimate,
    MatrixSignal, SignalSpec, Vector, DEFAULT_EIG_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

/// Errors produced while running an experiment.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The configuration failed validation.
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    /// A numerical routine failed.
    #[error(transparent)]
    Lib(#[from] lyabound::Error),
    /// Writing an output file failed.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Sample statistics over the replica exponent estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStats {
    /// Mean of the replica estimates.
    pub mean: f64,
    /// Sample standard deviation (zero for a single replica).
    pub std: f64,
    /// Standard error of the mean (zero for a single replica).
    pub stderr: f64,
    /// The individual estimates, in replica order.
    pub values: Vec<f64>,
}

impl LambdaStats {
    fn from_values(values: Vec<f64>) -> Self {
        let k = values.len();
        let mean = values.iter().sum::<f64>() / k as f64;
        let (std, stderr) = if k > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            let std = var.sqrt();
            (std, std / (k as f64).sqrt())
        } else {
            (0.0, 0.0)
        };
        LambdaStats {
            mean,
            std,
            stderr,
            values,
        }
    }
}

/// One bound compared against the estimated exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// Which bound was evaluated.
    pub kind: BoundKind,
    /// The bound's value.
    pub bound: f64,
    /// Mean estimated exponent it is compared against.
    pub lambda_mean: f64,
    /// Slack added to the mean before the comparison.
    pub slack: f64,
    /// `lambda_mean + slack - bound`; negative means the check failed.
    pub margin: f64,
    /// True when the bound exceeds the slack-adjusted estimate.
    pub violated: bool,
}

/// The serialized outcome of `lyabound run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Name copied from the config.
    pub name: String,
    /// SHA-256 of the exact config bytes, for reproducibility audits.
    pub config_sha256: String,
    /// System dimension.
    pub n: usize,
    /// Signal kind label: `constant`, `periodic`, or `markov`.
    pub signal_kind: String,
    /// Integration horizon.
    pub horizon: f64,
    /// Integration step actually used.
    pub step: f64,
    /// Number of replicas run.
    pub replicas: usize,
    /// Exponent statistics over replicas.
    pub lambda: LambdaStats,
    /// Largest late-window spread of the running estimate across replicas.
    pub tail_spread_max: f64,
    /// Lower bounds evaluated in the signal's natural mode.
    pub bounds: BoundReport,
    /// Exponent from the period map, for periodic signals only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floquet_exponent: Option<f64>,
    /// Single-trajectory estimate, present when the config supplies `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_lambda: Option<f64>,
    /// Every bound compared against the slack-adjusted mean exponent.
    pub checks: Vec<BoundCheck>,
    /// True when any check failed.
    pub any_violation: bool,
}

/// Result plus the per-replica checkpoint traces (written as CSV, not JSON).
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// The JSON-facing summary.
    pub result: ExperimentResult,
    /// Checkpoint traces, one per replica, in replica order.
    pub checkpoint_sets: Vec<Vec<Checkpoint>>,
}

/// Hex-encoded SHA-256 of the raw config bytes.
pub fn config_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn realize_replicas(config: &ExperimentConfig) -> Result<Vec<MatrixSignal>, RunError> {
    match &config.signal {
        SignalSpec::Markov { seed, .. } => {
            let base = config.base_seed.unwrap_or(*seed);
            (0..config.replicas)
                .map(|k| {
                    config
                        .signal
                        .realize_with_seed(base.wrapping_add(k as u64))
                        .map_err(RunError::from)
                })
                .collect()
        }
        _ => Ok(vec![config.signal.realize().map_err(RunError::from)?]),
    }
}

/// Run an experiment described by `config`; `config_bytes` are the exact
/// bytes the config was parsed from and are hashed into the result.
pub fn run_experiment(
    config: &ExperimentConfig,
    config_bytes: &[u8],
) -> Result<ExperimentOutput, RunError> {
    config.validate()?;
    let signals = realize_replicas(config)?;
    let step = config.step.unwrap_or_else(|| default_step(&signals[0]));

    let estimates: Vec<LyapunovEstimate> = signals
        .par_iter()
        .map(|sig| top_exponent_matrix(sig, config.horizon, step, config.checkpoints))
        .collect::<Result<_, _>>()?;

    let lambda = LambdaStats::from_values(estimates.iter().map(|e| e.lambda_hat).collect());
    let tail_spread_max = estimates
        .iter()
        .map(|e| e.tail_spread)
        .fold(0.0f64, f64::max);

    let bounds = best_bound(
        &signals[0],
        &BoundConfig {
            step,
            ..BoundConfig::default()
        },
    )?;

    let floquet = if config.signal_kind() == "periodic" {
        let m = monodromy(&signals[0], step)?;
        Some(floquet_exponent(&m, DEFAULT_EIG_TOL)?)
    } else {
        None
    };

    let vector_lambda = match &config.x0 {
        Some(x0) => {
            let v = Vector::new(x0.clone())?;
            Some(top_exponent_vector(&signals[0], &v, config.horizon, step, config.checkpoints)?.lambda_hat)
        }
        None => None,
    };

    let slack = config.bound_slack(lambda.stderr);
    let mut candidates: Vec<(BoundKind, f64)> = vec![
        (BoundKind::Kolotilina, bounds.kolotilina),
        (BoundKind::FrobeniusMinRowSum, bounds.min_row_sum),
        (BoundKind::FrobeniusMinColSum, bounds.min_col_sum),
    ];
    if let Some(pw) = &bounds.best_pairwise {
        candidates.push((BoundKind::Pairwise { i: pw.i, j: pw.j }, pw.value));
    }
    let checks: Vec<BoundCheck> = candidates
        .into_iter()
        .map(|(kind, bound)| {
            let margin = lambda.mean + slack - bound;
            BoundCheck {
                kind,
                bound,
                lambda_mean: lambda.mean,
                slack,
                margin,
                violated: margin < 0.0,
            }
        })
        .collect();
    let any_violation = checks.iter().any(|c| c.violated);

    let result = ExperimentResult {
        name: config.name.clone(),
        config_sha256: config_digest(config_bytes),
        n: signals[0].n(),
        signal_kind: config.signal_kind().to_string(),
        horizon: config.horizon,
        step,
        replicas: config.replicas,
        lambda,
        tail_spread_max,
        bounds,
        floquet_exponent: floquet,
        vector_lambda,
        checks,
        any_violation,
    };
    Ok(ExperimentOutput {
        result,
        checkpoint_sets: estimates.into_iter().map(|e| e.checkpoints).collect(),
    })
}

/// Write one `checkpoints_rKKK.csv` per replica into `dir`.
///
/// Columns: `t,running_lambda,log_scale`. Floats use the shortest
/// representation that parses back to the same value, so reruns of the
/// same config produce byte-identical files.
pub fn write_checkpoint_csv(dir: &Path, output: &ExperimentOutput) -> Result<(), RunError> {
    for (k, cps) in output.checkpoint_sets.iter().enumerate() {
        let path = dir.join(format!("checkpoints_r{k:03}.csv"));
        let mut buf = Vec::with_capacity(64 * (cps.len() + 1));
        writeln!(buf, "t,running_lambda,log_scale")?;
        for cp in cps {
            writeln!(buf, "{},{},{}", cp.t, cp.running_lambda, cp.log_scale)?;
        }
        std::fs::write(path, buf)?;
    }
    Ok(())
}

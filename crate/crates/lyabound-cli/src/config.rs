//! Experiment configuration: the JSON document consumed by `lyabound run`.

use lyabound::{SignalSpec, DEFAULT_CHECKPOINTS};
use serde::{Deserialize, Serialize};

/// Errors produced while validating an [`ExperimentConfig`].
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// The horizon must be a positive finite number.
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    /// The step override must be a positive finite number.
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    /// At least one checkpoint is required.
    #[error("checkpoints must be at least 1")]
    NoCheckpoints,
    /// At least one replica is required.
    #[error("replicas must be at least 1")]
    NoReplicas,
    /// Replicas only make sense for signals with sampled randomness.
    #[error("replicas > 1 requires a markov signal; {kind} signals are deterministic")]
    ReplicasWithoutRandomness {
        /// Signal kind from the config.
        kind: &'static str,
    },
    /// `base_seed` only applies to markov signals.
    #[error("base_seed requires a markov signal; {kind} signals ignore seeds")]
    SeedWithoutRandomness {
        /// Signal kind from the config.
        kind: &'static str,
    },
    /// The initial vector must match the system dimension.
    #[error("x0 has length {got} but the signal has dimension {expected}")]
    X0Dimension {
        /// Length of the provided vector.
        got: usize,
        /// Dimension of the signal.
        expected: usize,
    },
    /// The initial vector must be nonnegative with positive norm.
    #[error("x0 must be entrywise nonnegative and finite with positive norm")]
    BadX0,
    /// The tolerance override must be finite.
    #[error("tolerance must be finite, got {0}")]
    BadTolerance(f64),
    /// The embedded signal failed validation.
    #[error("invalid signal: {0}")]
    Signal(#[from] lyabound::Error),
}

fn default_checkpoints() -> usize {
    DEFAULT_CHECKPOINTS
}

fn default_replicas() -> usize {
    1
}

/// A single experiment: one signal, one horizon, and estimator settings.
///
/// Serialized as JSON. Unknown fields are rejected so typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Human-readable label, echoed into results and used for file names.
    pub name: String,
    /// The time-varying coefficient matrix to integrate.
    pub signal: SignalSpec,
    /// Length of the integration window starting at time zero.
    pub horizon: f64,
    /// Integration step override; defaults per signal kind when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Number of running-estimate checkpoints to record.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Number of independent path realizations (markov signals only).
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Base seed for replica paths; replica `k` uses `base_seed + k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    /// Optional initial vector; when present a single-trajectory estimate
    /// is computed alongside the matrix-flow estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Slack added to the estimated exponent before bound checks.
    ///
    /// Defaults per signal kind; may be negative to tighten the check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    /// Parse a config from JSON bytes.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Signal kind as a lowercase label.
    pub fn signal_kind(&self) -> &'static str {
        match self.signal {
            SignalSpec::Constant { .. } => "constant",
            SignalSpec::Periodic { .. } => "periodic",
            SignalSpec::Markov { .. } => "markov",
        }
    }

    /// Check every field for consistency; cheap, does not integrate anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ConfigError::BadHorizon(self.horizon));
        }
        if let Some(step) = self.step {
            if !(step.is_finite() && step > 0.0) {
                return Err(ConfigError::BadStep(step));
            }
        }
        if self.checkpoints == 0 {
            return Err(ConfigError::NoCheckpoints);
        }
        if self.replicas == 0 {
            return Err(ConfigError::NoReplicas);
        }
        let kind = self.signal_kind();
        if kind != "markov" {
            if self.replicas > 1 {
                return Err(ConfigError::ReplicasWithoutRandomness { kind });
            }
            if self.base_seed.is_some() {
                return Err(ConfigError::SeedWithoutRandomness { kind });
            }
        }
        // Realizing the signal spec revalidates the embedded
        // matrices/generator.
        let signal = self.signal.realize()?;
        if let Some(x0) = &self.x0 {
            if x0.len() != signal.n() {
                return Err(ConfigError::X0Dimension {
                    got: x0.len(),
                    expected: signal.n(),
                });
            }
            let mut norm = 0.0f64;
            for &v in x0 {
                if !v.is_finite() || v < 0.0 {
                    return Err(ConfigError::BadX0);
                }
                norm += v * v;
            }
            if norm <= 0.0 {
                return Err(ConfigError::BadX0);
            }
        }
        if let Some(tol) = self.tolerance {
            if !tol.is_finite() {
                return Err(ConfigError::BadTolerance(tol));
            }
        }
        Ok(())
    }

    /// Slack added to the mean exponent before comparing against bounds.
    ///
    /// Deterministic signals get a small fixed slack for discretization
    /// error; markov signals get `3 * stderr + 1e-2` to absorb sampling
    /// noise on top of the finite-horizon deviation of the time average
    /// from its expectation.
    pub fn bound_slack(&self, stderr: f64) -> f64 {
        match self.tolerance {
            Some(t) => t,
            None => match self.signal {
                SignalSpec::Constant { .. } => 1e-6,
                SignalSpec::Periodic { .. } => 1e-4,
                SignalSpec::Markov { .. } => 3.0 * stderr + 1e-2,
            },
        }
    }
}

//! Library backing the `lyabound` command-line tool.
//!
//! The binary is a thin argument-parsing shell; everything it does lives
//! here so integration tests can drive the same code paths in-process:
//!
//! - [`config`]: the experiment configuration schema and its validation.
//! - [`experiment`]: running one experiment (replicated estimation, bound
//!   evaluation, bound-vs-exponent checks) and serializing the outcome.
//! - [`suite`]: deterministic generation of experiment families.

#![warn(missing_docs)]

pub mod config;
pub mod experiment;
pub mod suite;

pub use config::{ConfigError, ExperimentConfig};
pub use experiment::{
    config_digest, run_experiment, write_checkpoint_csv, BoundCheck, ExperimentOutput,
    ExperimentResult, LambdaStats, RunError,
};
pub use suite::{generate_suite, SuiteKind};

// Run the guide's CLI chapter as a doc-test so its snippet and schema
// examples track this crate's actual API.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

//! `lyabound` — Lyapunov exponents and spectral lower bounds for
//! cooperative linear systems, from the command line.
//!
//! Exit codes: 0 on success, 2 when a bound check fails (a lower bound
//! exceeded the slack-adjusted exponent estimate), 1 on any other error.

use clap::{Parser, Subcommand};
use lyabound::{
    best_bound, BoundConfig, MatrixSignal, MlMatrix, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL,
};
use lyabound_cli::{
    generate_suite, run_experiment, write_checkpoint_csv, ExperimentConfig, RunError, SuiteKind,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

/// Tolerance used by `bound` when certifying bounds against the dominant
/// eigenvalue computed to `DEFAULT_EIG_TOL`.
const CERT_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "lyabound",
    version,
    about = "Lyapunov exponents and lower bounds for cooperative linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config and print the result as JSON.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Directory to write result.json into (created if missing).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-replica checkpoint CSV files (requires --out).
        #[arg(long, requires = "out")]
        csv: bool,
    },
    /// Generate a deterministic suite of experiment configs.
    Gen {
        /// Suite family: static, periodic, or switched.
        #[arg(value_parser = SuiteKind::from_str)]
        kind: SuiteKind,
        /// Number of configs to generate.
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Seed for the generation stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory to write the configs and manifest into.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate static lower bounds for one matrix and certify them
    /// against its dominant eigenvalue.
    Bound {
        /// Path to a JSON file holding the matrix as
        /// `{"n": N, "rows": [[...], ...]}`.
        matrix: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Lib(#[from] lyabound::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn cmd_run(config_path: &Path, out: Option<&Path>, csv: bool) -> Result<ExitCode, CliError> {
    let bytes = read_file(config_path)?;
    let cfg = ExperimentConfig::from_json_bytes(&bytes).map_err(|source| CliError::Parse {
        path: config_path.display().to_string(),
        source,
    })?;
    let output = run_experiment(&cfg, &bytes)?;
    let mut text = serde_json::to_string_pretty(&output.result)?;
    text.push('\n');
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("result.json"), &text)?;
        if csv {
            write_checkpoint_csv(dir, &output)?;
        }
    }
    print!("{text}");
    let r = &output.result;
    let worst = r
        .checks
        .iter()
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "{}: lambda_mean={:.9} best={}({:.9}) worst_margin={worst:+.3e}{}",
        r.name,
        r.lambda.mean,
        r.bounds.best.kind,
        r.bounds.best.value,
        if r.any_violation { " BOUND VIOLATION" } else { "" }
    );
    Ok(if r.any_violation {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_gen(kind: SuiteKind, count: usize, seed: u64, out: &Path) -> Result<ExitCode, CliError> {
    let configs = generate_suite(kind, count, seed)?;
    std::fs::create_dir_all(out)?;
    let mut files = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let file = format!("{}.json", cfg.name);
        let mut text = serde_json::to_string_pretty(cfg)?;
        text.push('\n');
        std::fs::write(out.join(&file), text)?;
        files.push(file);
    }
    let manifest = serde_json::json!({
        "kind": kind.to_string(),
        "count": count,
        "seed": seed,
        "files": files,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), &text)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(matrix_path: &Path) -> Result<ExitCode, CliError> {
    let bytes = read_file(matrix_path)?;
    let m: MlMatrix = serde_json::from_slice(&bytes).map_err(|source| CliError::Parse {
        path: matrix_path.display().to_string(),
        source,
    })?;
    let d = m.dominant_eigenvalue(DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER)?;
    let report = best_bound(&MatrixSignal::constant(m.clone()), &BoundConfig::default())?;
    let mut certified = report.kolotilina <= d + CERT_SLACK
        && report.min_row_sum <= d + CERT_SLACK
        && report.min_col_sum <= d + CERT_SLACK;
    if let Some(pw) = &report.best_pairwise {
        certified = certified && pw.value <= d + CERT_SLACK;
    }
    let doc = serde_json::json!({
        "n": m.n(),
        "dominant_eigenvalue": d,
        "report": report,
        "certified": certified,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    print!("{text}");
    Ok(if certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run { config, out, csv } => cmd_run(&config, out.as_deref(), csv),
        Command::Gen {
            kind,
            count,
            seed,
            out,
        } => cmd_gen(kind, count, seed, &out),
        Command::Bound { matrix } => cmd_bound(&matrix),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

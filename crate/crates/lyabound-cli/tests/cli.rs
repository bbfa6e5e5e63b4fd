//! End-to-end tests that drive the `lyabound` binary as a subprocess:
//! argument handling, exit codes, file outputs, and rerun determinism.

use lyabound_cli::{ExperimentConfig, ExperimentResult};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lyabound"))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

fn stdout_str(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).unwrap()
}

fn stderr_str(out: &Output) -> &str {
    std::str::from_utf8(&out.stderr).unwrap()
}

const CONSTANT_CONFIG: &str = r#"{
    "name": "cli-const",
    "signal": {
        "kind": "constant",
        "matrix": { "n": 2, "rows": [[1.0, 2.0], [3.0, 4.0]] }
    },
    "horizon": 100.0,
    "checkpoints": 8
}
"#;

#[test]
fn run_prints_result_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    write(&cfg, CONSTANT_CONFIG);
    let out_dir = dir.path().join("out");

    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--csv")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));

    let result: ExperimentResult = serde_json::from_str(stdout_str(&out)).unwrap();
    let d = (5.0 + 33.0f64.sqrt()) / 2.0;
    assert!((result.lambda.mean - d).abs() < 1e-9);
    assert!(!result.any_violation);

    // result.json holds exactly the bytes printed to stdout.
    let file_bytes = std::fs::read(out_dir.join("result.json")).unwrap();
    assert_eq!(file_bytes, out.stdout);

    let csv = std::fs::read_to_string(out_dir.join("checkpoints_r000.csv")).unwrap();
    assert!(csv.starts_with("t,running_lambda,log_scale\n"));
    assert_eq!(csv.lines().count(), 9);

    // The one-line summary goes to stderr, keeping stdout pure JSON.
    assert!(stderr_str(&out).contains("cli-const"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    write(&cfg, CONSTANT_CONFIG);

    let a = bin().arg("run").arg(&cfg).output().unwrap();
    let b = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn bound_violation_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    write(
        &cfg,
        r#"{
            "name": "forced-violation",
            "signal": {
                "kind": "constant",
                "matrix": { "n": 2, "rows": [[0.0, 1.0], [1.0, 0.0]] }
            },
            "horizon": 50.0,
            "tolerance": -1000.0
        }"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let result: ExperimentResult = serde_json::from_str(stdout_str(&out)).unwrap();
    assert!(result.any_violation);
    assert!(stderr_str(&out).contains("BOUND VIOLATION"));
}

#[test]
fn errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();

    // Missing file.
    let out = bin().arg("run").arg(dir.path().join("nope.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("error"));

    // Malformed JSON.
    let cfg = dir.path().join("bad.json");
    write(&cfg, "{ not json");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("invalid JSON"));

    // Well-formed JSON that fails validation (bad horizon).
    write(
        &cfg,
        r#"{
            "name": "bad-horizon",
            "signal": { "kind": "constant", "matrix": { "n": 1, "rows": [[0.0]] } },
            "horizon": -1.0
        }"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("horizon"));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_str(&out).contains("lyabound"));

    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // --csv without --out is a usage error.
    let out = bin().arg("run").arg("x.json").arg("--csv").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_writes_deterministic_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out_dir in [&out_a, &out_b] {
        let out = bin()
            .args(["gen", "static", "--count", "3", "--seed", "9", "--out"])
            .arg(out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    }

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_a.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap().to_string())
        .collect();
    assert_eq!(files.len(), 3);

    for file in &files {
        let bytes_a = std::fs::read(out_a.join(file)).unwrap();
        let bytes_b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between identical gens");
        let cfg = ExperimentConfig::from_json_bytes(&bytes_a).unwrap();
        cfg.validate().unwrap();
    }
}

#[test]
fn generated_configs_run_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let suite_dir = dir.path().join("suite");
    let out = bin()
        .args(["gen", "static", "--count", "1", "--seed", "4", "--out"])
        .arg(&suite_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    let out = bin()
        .arg("run")
        .arg(suite_dir.join("static-000.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let result: ExperimentResult = serde_json::from_str(stdout_str(&out)).unwrap();
    assert_eq!(result.signal_kind, "constant");
    assert!(!result.any_violation);
}

#[test]
fn bound_certifies_a_static_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("matrix.json");
    // Symmetric exchange matrix: dominant eigenvalue 1, and the trace-plus-
    // geometric-mean bound is tight here.
    write(&path, r#"{ "n": 2, "rows": [[0.0, 1.0], [1.0, 0.0]] }"#);

    let out = bin().arg("bound").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value = serde_json::from_str(stdout_str(&out)).unwrap();
    assert_eq!(doc["n"], 2);
    assert!((doc["dominant_eigenvalue"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(doc["report"]["kolotilina"], 1.0);
    assert_eq!(doc["certified"], true);
}

#[test]
fn bound_rejects_a_non_metzler_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("matrix.json");
    write(&path, r#"{ "n": 2, "rows": [[0.0, -1.0], [1.0, 0.0]] }"#);

    let out = bin().arg("bound").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("invalid JSON"));
}

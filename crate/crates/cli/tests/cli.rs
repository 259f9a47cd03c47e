//! The `r2r` binary: subcommands, logs, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
toy_classes = 4
toy_per_class = 30
toy_size = 8
tasks = 2
latent_dim = 4
channels = [4]
epochs = 2
samples_per_cluster = 10
rho = 0.0
tau_uncertain = 0.0
fine_tune_epochs = 1
"#;

fn r2r(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r2r"))
        .args(args)
        .env_remove("R2R_SIDECAR_URL")
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stderr)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect()
}

#[test]
fn run_writes_a_report_and_logs_stages_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = r2r(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("accuracy"));
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["config"]["seed"], 3);

    let logs = stderr_json(&out);
    assert!(!logs.is_empty());
    for task in 1..=2 {
        let mut stages: Vec<&str> = logs
            .iter()
            .filter(|l| l["fields"]["task"] == task)
            .filter_map(|l| l["fields"]["stage"].as_str())
            .collect();
        stages.dedup();
        assert_eq!(stages, ["A", "B", "C", "D", "eval"], "task {task}");
    }
}

#[test]
fn replay_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = r2r(&["run", "--config", &cfg, "--replay", "none", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["replay"], "none");
    assert!(report["generation_calls"].as_object().unwrap().values().all(|v| v == 0));
    assert_eq!(r2r(&["run", "--config", &cfg, "--replay", "diffusion"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = r2r(&["run", "--config", &write_config(dir.path(), "etta = 0.1\n")]);
    assert_eq!(unknown.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&unknown.stderr);
    assert!(msg.contains("etta") && msg.contains("samples_per_cluster"), "{msg}");

    let range = r2r(&["run", "--config", &write_config(dir.path(), "eta = -1.0\n")]);
    assert_eq!(range.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&range.stderr).contains("eta"));

    let missing = r2r(&["run", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("dataset = \"cifar10\"\ndata_path = \"{}\"\n", dir.path().join("nothing").display());
    let out = r2r(&["run", "--config", &write_config(dir.path(), &body)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let inspect = r2r(&["inspect", "--run", dir.path().join("nothing").to_str().unwrap()]);
    assert_eq!(inspect.status.code(), Some(3));
}

#[test]
fn inspect_prints_summary_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    assert!(r2r(&["run", "--config", &cfg, "--replay", "none", "--out", out_dir.to_str().unwrap()]).status.success());
    let summary = r2r(&["inspect", "--run", out_dir.to_str().unwrap()]);
    assert!(summary.status.success());
    assert!(String::from_utf8_lossy(&summary.stdout).contains("accuracy"));
    let json = r2r(&["inspect", "--run", out_dir.to_str().unwrap(), "--json"]);
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["tasks"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = r2r(&["sweep", "--config", &cfg, "--samples", "0,5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn sidecar_url_comes_from_the_environment_and_falls_back() {
    let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", dead.local_addr().unwrap());
    drop(dead);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}sidecar_timeout_ms = 300\n"));
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_r2r"))
        .args(["run", "--config", &cfg, "--replay", "vlm", "--out", out_dir.to_str().unwrap()])
        .env("R2R_SIDECAR_URL", &url)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["sidecar_url"], url.as_str());
    assert!(report["generation_calls"]["decoder"].as_u64().unwrap() > 0);
    assert!(stderr_json(&out).iter().any(|l| l["level"] == "WARN"));
}

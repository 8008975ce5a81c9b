//! End-to-end behaviour of the `recical` binary: outputs, manifest and
//! failure reporting.

use std::path::Path;
use std::process::{Command, Output};

fn recical(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recical"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.trim()).unwrap_or_else(|e| panic!("not JSON ({e}): {stderr}"))
}

#[test]
fn crlb_map_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("small.json"),
        r#"{"array": {"rows": 2, "cols": 5}, "reference": 3, "n0_db": [-60, -40], "mse_sweep": {"antennas": [1, 2, 4]}}"#,
    )
    .unwrap();
    let out = recical(
        &[
            "crlb-map",
            "--config",
            "small.json",
            "--seed",
            "9",
            "--out",
            "res",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("res/crlb-map");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "crlb-map");
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["seeds"]["master"], 9);
    assert!(!manifest["seeds"]["entries"].as_array().unwrap().is_empty());
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for f in outputs {
        let path = Path::new(f["path"].as_str().unwrap());
        let path = if path.is_absolute() {
            path.to_path_buf()
        } else {
            tmp.path().join(path)
        };
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.len() as u64, f["bytes"].as_u64().unwrap());
        // header plus one line per row
        assert_eq!(text.lines().count() as u64, f["rows"].as_u64().unwrap() + 1);
    }
    // a full grid per noise level; the reference cell has no bound
    let map = std::fs::read_to_string(dir.join("crlb_map.csv")).unwrap();
    assert_eq!(map.lines().count(), 1 + 10 * 2);
    assert!(map
        .lines()
        .filter(|l| l.contains(",NaN,"))
        .all(|l| l.split(',').nth(1) == Some("3")));
}

#[test]
fn unknown_config_field_is_reported_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"trails": 10}"#).unwrap();
    let err = error_json(&recical(&["mse-sweep", "--config", "bad.json"], tmp.path()));
    assert_eq!(err["error"], "json");
    assert!(err["message"].as_str().unwrap().contains("trails"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn invalid_values_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"reference": 101}"#).unwrap();
    let err = error_json(&recical(&["capacity", "--config", "bad.json"], tmp.path()));
    assert_eq!(err["error"], "config");

    let err = error_json(&recical(&["capacity", "--trials", "0"], tmp.path()));
    assert_eq!(err["error"], "config");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_config_and_bad_arguments() {
    let tmp = tempfile::tempdir().unwrap();
    let err = error_json(&recical(&["wideband", "--config", "nope.json"], tmp.path()));
    assert_eq!(err["error"], "io");
    assert!(err["message"].as_str().unwrap().contains("nope.json"));

    let err = error_json(&recical(&["no-such-experiment"], tmp.path()));
    assert_eq!(err["error"], "usage");

    let help = recical(&["--help"], tmp.path());
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("mse-sweep"));
}

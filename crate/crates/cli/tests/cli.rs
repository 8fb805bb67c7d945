use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tracelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracelab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constant_pair_has_zero_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "trace.json",
        r#"{"experiment": "trace-approx",
            "models": [{"kind": "constant", "params": {"c": 0.5}},
                       {"kind": "constant", "params": {"c": 2.0}}],
            "grid": [16, 64, 256]}"#,
    );
    let out = tracelab(&["trace-approx", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rows = csv::Reader::from_path(dir.path().join("trace-approx.csv")).unwrap();
    let mut n = 0;
    for row in rows.records() {
        let row = row.unwrap();
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
        n += 1;
    }
    assert_eq!(n, 3);
    let doc = read_json(&dir.path().join("trace-approx.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["results"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_grid_exits_with_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\n  \"models\": [{\"kind\": \"constant\", \"params\": {\"c\": 1.0}}]\n}\n",
    );
    let out = tracelab(&["trace-approx", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing field `grid`") && err.contains("line 3"), "{err}");
}

#[test]
fn degenerate_rate_experiment_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // both matrices are multiples of the identity, so every error vanishes
    let cfg = write_config(
        dir.path(),
        "rate.json",
        r#"{"model_id": "white", "theorem": {"name": "t4_2"},
            "models": [{"kind": "constant", "params": {"c": 1.0}},
                       {"kind": "constant", "params": {"c": 3.0}}],
            "grid": [16, 32, 64, 128]}"#,
    );
    let out = tracelab(&["rate-fit", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn default_kernel_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = tracelab(&["kernel-check", "--out", dir.path().to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = read_json(&dir.path().join("kernel-check.json"));
    assert_eq!(doc["results"]["passed"], doc["results"]["total"]);
    assert!(!dir.path().join("kernel-check.csv").exists());
}

#[test]
fn white_noise_variance_matches_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "clt.json",
        r#"{"experiment": "clt_sim",
            "f": {"kind": "constant", "params": {"c": 1.0}},
            "g": {"kind": "constant", "params": {"c": 1.0}},
            "horizon": 256, "replicates": 4000, "seed": 11}"#,
    );
    let out = tracelab(&["clt-sim", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.path().join("clt-sim.json"));
    let study = &doc["results"]["study"];
    // unit densities put the limit at 32π⁴, i.e. 2 in units of (2π)⁴
    let ratio = study["variance"].as_f64().unwrap() / study["sigma0_squared"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    assert_eq!(doc["seed"], 11);
    let cdf = csv::Reader::from_path(dir.path().join("clt-sim.csv")).unwrap().into_records().count();
    assert_eq!(cdf, 161);
}

#[test]
fn rate_function_vanishes_at_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ldp.json",
        r#"{"f": {"kind": "constant", "params": {"c": 0.3}},
            "g": {"kind": "constant", "params": {"c": 1.0}},
            "x": [0.15, 0.3, 0.6]}"#,
    );
    let out = tracelab(&["ldp", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("I(0.3) = 0.00000000"), "{stdout}");
    let doc = read_json(&dir.path().join("ldp.json"));
    let rates: Vec<f64> =
        doc["results"]["points"].as_array().unwrap().iter().map(|p| p["rate"].as_f64().unwrap()).collect();
    assert!(rates[0] > 0.0 && rates[1].abs() < 1e-12 && rates[2] > 0.0);
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "clt.json",
        r#"{"f": {"kind": "arfima_pdq", "params": {"sigma2": 1.0, "d": 0.0, "ar": [0.5]}},
            "g": {"kind": "constant", "params": {"c": 1.0}},
            "horizon": 64, "replicates": 500}"#,
    );
    let mut docs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = tracelab(&["clt-sim", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "5"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut doc = read_json(&out_dir.join("clt-sim.json"));
        doc.as_object_mut().unwrap().remove("generated_at_unix");
        docs.push(serde_json::to_string(&doc).unwrap());
        assert_eq!(
            std::fs::read(out_dir.join("clt-sim.csv")).unwrap(),
            std::fs::read(dir.path().join("a").join("clt-sim.csv")).unwrap()
        );
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn mismatched_experiment_and_zero_threads_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x.json", r#"{"experiment": "ldp", "models": [], "grid": [8]}"#);
    assert_eq!(tracelab(&["trace-approx", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(tracelab(&["kernel-check", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(tracelab(&["trace-approx"]).status.code(), Some(2));
}

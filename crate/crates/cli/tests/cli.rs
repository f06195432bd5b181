use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lattice_flow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-flow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const DNLS: &str = r#"{
    "schema_version": 1,
    "model": "dnls",
    "lattice": {"dim": 1, "n": 32, "h": 1.0},
    "params": {"sigma": 1, "lambda": 1, "potential": {"kind": "zero"}},
    "initial": {"kind": "random", "seed": 3, "amplitude": 1.0},
    "integrator": {"kind": "strang", "tau": 0.001},
    "horizon": 2.0,
    "diagnostics": {"cadence": 0.05}
}"#;

#[test]
fn dnls_run_writes_artifacts_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.json", DNLS);
    let out = tmp.path().join("out");
    let result = lattice_flow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    for name in ["metadata.json", "timing.json", "reports.json", "trajectory.csv"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let reports = read_json(&out.join("reports.json"));
    let claims: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["claim"].as_str().unwrap())
        .collect();
    assert!(claims.contains(&"lemma-3.1"));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 41);
    assert!(csv.starts_with("t,norm_p1,"));
    assert_eq!(read_json(&out.join("metadata.json"))["passed"], Value::Bool(true));
}

#[test]
fn seed_flag_overrides_random_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.json", DNLS);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    lattice_flow(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]);
    lattice_flow(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "99"]);
    let ta = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let tb = fs::read_to_string(b.join("trajectory.csv")).unwrap();
    assert_ne!(ta, tb);
    assert_ne!(read_json(&a.join("metadata.json"))["seeds"], read_json(&b.join("metadata.json"))["seeds"]);
}

#[test]
fn mismatched_integrator_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DNLS.replace(r#""kind": "strang", "tau": 0.001"#, r#""kind": "verlet", "tau": 0.001"#);
    let cfg = write_config(tmp.path(), "bad.json", &text);
    let out = tmp.path().join("out");
    let result = lattice_flow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let line: Value = serde_json::from_slice(&result.stderr).unwrap();
    assert_eq!(line["error"], "config");
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DNLS.replace(r#""horizon": 2.0"#, r#""horizon": 2.0, "horizn": 3"#);
    let cfg = write_config(tmp.path(), "bad.json", &text);
    let result = lattice_flow(&["simulate", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let result = lattice_flow(&["simulate", "--config", "/nonexistent/run.json", "--out", "/tmp/x"]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn blowup_campaign_passes_with_control_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "blowup.json",
        r#"{
            "schema_version": 1,
            "model": "dkg",
            "lattice": {"dim": 1, "n": 64, "h": 1.0},
            "params": {"sigma": 1, "lambda": -1, "potential": {"kind": "constant", "value": 1.0}},
            "initial": {"kind": "negative_energy_seed"},
            "integrator": {"kind": "verlet", "tau": 0.0001, "adaptive": true},
            "horizon": 100.0,
            "diagnostics": {"cadence": 0.01}
        }"#,
    );
    let out = tmp.path().join("out");
    let result = lattice_flow(&["blowup", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = read_json(&out.join("blowup.json"));
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(report["E0"].as_f64().unwrap() < 0.0);
    assert!(report["T_num"].as_f64().unwrap() <= 1.1 * report["T_pred"].as_f64().unwrap());
    assert_eq!(report["control"]["diverged"], Value::Bool(false));

    let plots = lattice_flow(&["plot", out.to_str().unwrap()]);
    assert_eq!(plots.status.code(), Some(0));
    let svg = fs::read_to_string(out.join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn defocusing_kg_with_decomposition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dkg.json",
        r#"{
            "schema_version": 1,
            "model": "dkg",
            "lattice": {"dim": 1, "n": 64, "h": 1.0},
            "params": {"sigma": 1, "lambda": 1, "potential": {"kind": "iid_uniform", "lo": 0, "hi": 2, "seed": 5}},
            "initial": {"kind": "random", "seed": 6, "amplitude": 0.5},
            "integrator": {"kind": "verlet", "tau": 0.001},
            "horizon": 2.0,
            "diagnostics": {"cadence": 0.1, "decomposition": true}
        }"#,
    );
    let out = tmp.path().join("out");
    let result = lattice_flow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,l2_u,l2_v,energy,I,Iprime,linf_u,diverged"));
    let reports = read_json(&out.join("reports.json"));
    assert!(reports.as_array().unwrap().iter().any(|r| r["claim"] == "prop-4.2"));
}

#[test]
fn kernel_sweep_exports_kernels_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "kernel.json",
        r#"{"schema_version": 1, "alpha": 0.5, "dims": [1], "h_list": [1.0, 0.5], "export_kernels": true}"#,
    );
    let out = tmp.path().join("out");
    let result = lattice_flow(&["kernel-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(matches!(result.status.code(), Some(0 | 1)), "{result:?}");
    assert!(out.join("kernel_d1_h0.5.csv").exists());
    let summary = read_json(&out.join("kernel_sweep.json"));
    let records = summary["sweeps"][0]["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r["fitted_C"].as_f64().unwrap() > 0.0));
    let plots = lattice_flow(&["plot", out.to_str().unwrap(), "--out", tmp.path().join("fig").to_str().unwrap()]);
    assert_eq!(plots.status.code(), Some(0));
    assert!(tmp.path().join("fig/kernel_sweep.svg").exists());
}

#[test]
fn growth_sweep_passes_on_a_small_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "growth.json",
        r#"{"schema_version": 1, "flows": ["schrodinger", "kg"], "dims": [1], "n": [32],
            "h_list": [1.0, 0.5], "t_grid": [0.0, 0.5, 1.0, 2.0], "trials": 10, "seed": 1,
            "bessel_alphas": [0.25, 1.0]}"#,
    );
    let out = tmp.path().join("out");
    let result = lattice_flow(&["growth-sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let summary = read_json(&out.join("growth_sweep.json"));
    // 2 flows x 2 h x 5 exponents
    assert_eq!(summary["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn plot_rejects_empty_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("trajectory.csv"), "").unwrap();
    let result = lattice_flow(&["plot", tmp.path().to_str().unwrap()]);
    assert_ne!(result.status.code(), Some(0));
    let header_only = tempfile::tempdir().unwrap();
    fs::write(header_only.path().join("trajectory.csv"), "t,l2_u\n").unwrap();
    let result = lattice_flow(&["plot", header_only.path().to_str().unwrap()]);
    assert_ne!(result.status.code(), Some(0));
}

#[test]
fn plot_rejects_directory_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let result = lattice_flow(&["plot", tmp.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
}

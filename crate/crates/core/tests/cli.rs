use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slowlab"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn config(name: &str) -> PathBuf {
    root().join("../../configs").join(name)
}

fn run(cmd: &str, cfg: &Path, out: &Path, format: &str) -> std::process::Output {
    bin()
        .args([cmd, "--config"])
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(["--format", format])
        .output()
        .unwrap()
}

fn assert_valid(schema: &str, doc: &Path) {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(root().join("schema").join(schema)).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let value: Value = serde_json::from_str(&std::fs::read_to_string(doc).unwrap()).unwrap();
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("{} does not match {schema}: {msgs:?}", doc.display());
    };
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_passes_on_the_mirror_and_writes_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("check", &config("check_mirror.json"), dir.path(), "csv");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_valid("check.schema.json", &dir.path().join("check.json"));
    assert!(dir.path().join("check.csv").exists());
}

#[test]
fn magnetization_violation_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"system": "relativistic-pauli",
            "faraday": {"kind": "crossed-fields", "e": [0, 1.5, 0], "b": [0, 0, 1],
                        "domain": {"lo": [-5, -5, -5], "hi": [5, 5, 5]}},
            "slow": [0, 0, 0, 0, 0.3], "check_points": 5}"#,
    );
    let out = run("check", &cfg, &dir.path().join("o"), "json");
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("magnetization assumption violated"), "{stdout}");
    assert_valid("check.schema.json", &dir.path().join("o/check.json"));
}

#[test]
fn non_spd_metric_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"system": "symplectic-lorentz",
            "setup": {"dof": 1, "hamiltonian": {"kind": "oscillator"},
                      "metric": {"kind": "constant", "rows": [[1, 2], [2, 1]]}},
            "slow": [1, 0], "check_points": 5}"#,
    );
    let out = run("check", &cfg, &dir.path().join("o"), "csv");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not positive definite"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.json", r#"{"system": "classical-pauli", "slw": [0, 0, 0, 0]}"#);
    let out = run("simulate", &typo, dir.path(), "csv");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("typo.json") && err.contains("line"), "{err}");

    let short = write(
        dir.path(),
        "short.json",
        r#"{"system": "symplectic-lorentz",
            "setup": {"dof": 1, "hamiltonian": {"kind": "oscillator"}, "metric": {"kind": "identity"}},
            "slow": [1, 0], "epsilons": [0.1, 0.05]}"#,
    );
    assert_eq!(run("sweep", &short, dir.path(), "csv").status.code(), Some(2));
    assert_eq!(run("check", &dir.path().join("missing.json"), dir.path(), "csv").status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Starts outside the field domain.
    let cfg = write(
        dir.path(),
        "outside.json",
        r#"{"system": "classical-pauli",
            "field": {"kind": "magnetic-mirror", "b0": 1, "length": 1, "domain": {"lo": [-1, -1, -1], "hi": [1, 1, 1]}},
            "slow": [3, 0, 0, 0.5], "epsilon": 0.1}"#,
    );
    assert_eq!(run("simulate", &cfg, dir.path(), "csv").status.code(), Some(3));
}

#[test]
fn simulate_writes_consistent_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("simulate", &config("simulate_mirror.json"), dir.path(), "csv");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.len(), 1 + 6 + 3);
    assert_eq!(&header[7..], ["energy", "mu2", "normal_distance"]);
    let mut rows = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        assert_eq!(r.len(), header.len());
        assert!(r.iter().all(|v| v.parse::<f64>().unwrap().is_finite()));
        rows += 1;
    }
    assert!(rows > 2);
    let summary = dir.path().join("summary.json");
    assert_valid("summary.schema.json", &summary);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert!(v["drift"]["max_abs_drift"].as_f64().unwrap().is_finite());
    assert!((v["final_time"].as_f64().unwrap() - 20.0).abs() < 1e-9);
}

#[test]
fn simulate_json_format_and_uniform_normal_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "uniform.json",
        r#"{"system": "classical-pauli",
            "field": {"kind": "uniform", "b0": 1, "domain": {"lo": [-50, -50, -50], "hi": [50, 50, 50]}},
            "slow": [0, 0, 0, 0.5], "epsilon": 0.1, "integrator": {"stride": 1}}"#,
    );
    let out = run("simulate", &cfg, &dir.path().join("o"), "json");
    assert_eq!(out.status.code(), Some(0));
    let traj = dir.path().join("o/trajectory.json");
    assert_valid("trajectory.schema.json", &traj);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(traj).unwrap()).unwrap();
    let cols = v["columns"].as_array().unwrap();
    let nd = cols.iter().position(|c| c == "normal_distance").unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row.as_array().unwrap().len(), cols.len());
        assert!(row[nd].as_f64().unwrap().abs() < 1e-10);
    }
}

#[test]
fn symplectic_energy_stays_within_the_integrator_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("simulate", &config("simulate_pendulum.json"), dir.path(), "csv");
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(!v["flagged"].as_bool().unwrap());
    assert!(v["max_relative_energy_drift"].as_f64().unwrap() < 1e-9);
}

#[test]
fn sweep_and_compare_reports_validate_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run("sweep", &config("normal_mirror.json"), out, "csv");
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    assert_valid("sweep.schema.json", &a.join("sweep.json"));
    let ra: Value = serde_json::from_str(&std::fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    let rb: Value = serde_json::from_str(&std::fs::read_to_string(b.join("sweep.json")).unwrap()).unwrap();
    for (fa, fb) in ra["fits"].as_array().unwrap().iter().zip(rb["fits"].as_array().unwrap()) {
        let (x, y) = (fa["exponent"].as_f64().unwrap(), fb["exponent"].as_f64().unwrap());
        assert!((x - y).abs() < 1e-12);
    }
    let mut rdr = csv::Reader::from_path(a.join("sweep.csv")).unwrap();
    let width = rdr.headers().unwrap().len();
    assert!(rdr.records().all(|r| r.unwrap().len() == width));

    let c = dir.path().join("c");
    let o = run("compare-gc", &config("gc_linear_gradient.json"), &c, "json");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_valid("compare_gc.schema.json", &c.join("compare_gc.json"));
}

#[test]
fn compare_gc_rejects_other_systems() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("compare-gc", &config("recovery_oscillator.json"), dir.path(), "csv");
    assert_eq!(o.status.code(), Some(2));
}

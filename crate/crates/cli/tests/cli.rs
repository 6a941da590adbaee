use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affine-sphere")).current_dir(dir).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_solution_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve", "--domain", "disk", "--grid", "65", "--out", "sol.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
    assert!(csv.starts_with("t1,t2,u,lambda_min\n"));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["tool"], "affine-sphere");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["solver"]["nodes"], 65);
    assert_eq!(r["passed"], true);
    assert!(r["result"]["interior_error"].as_f64().unwrap() <= 5e-3);
    assert!(!dir.path().join("sol.csv.lock").exists());
}

#[test]
fn hyperboloid_conormals_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["invariants", "--builtin", "hyperboloid", "--at", "0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("invariants.json"));
    let p = &r["result"]["points"][0];
    for key in ["nu", "mu"] {
        let v: Vec<f64> = p[key].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(v.len(), 3);
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12 && (v[2] - 1.0).abs() < 1e-12, "{key} {v:?}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["invariants", "--builtin", "ball", "--potential-file", "p.json"],
        &["solve", "--bogus"],
        &["transform"],
        &["verify", "--suite", "nope"],
        &["solve", "--domain", "torus"],
    ];
    for args in cases {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_conflict_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"builtin": "ball"}"#).unwrap();
    std::fs::write(dir.path().join("p.json"), r#"{"builtin": "ball", "n": 2}"#).unwrap();
    let o = run(dir.path(), &["invariants", "--config", "c.json", "--potential-file", "p.json"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.json"), r#"{"gird": 3}"#).unwrap();
    assert_eq!(run(dir.path(), &["solve", "--config", "bad.json"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"grid": 33, "seed": 7, "domain": "interval"}"#).unwrap();
    let o = run(dir.path(), &["solve", "--config", "c.json", "--grid", "65"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["config"]["solver"]["nodes"], 65);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["config"]["domain"]["kind"], "interval");
}

#[test]
fn locked_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("report.json.lock"), "").unwrap();
    let o = run(dir.path(), &["solve", "--grid", "33"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("in use"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--suite", "equivariance", "--quick", "--seed", "9", "--out", "sweeps"];
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("verify.json")).unwrap();
    let sweep = std::fs::read(dir.path().join("sweeps/00_equivariance.csv")).unwrap();
    assert_eq!(run(dir.path(), &args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("verify.json")).unwrap());
    assert_eq!(sweep, std::fs::read(dir.path().join("sweeps/00_equivariance.csv")).unwrap());
}

#[test]
fn quick_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--suite", "all", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(r["result"].as_array().unwrap().len(), 12);
}

#[test]
fn other_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["legendre", "--samples", "50"][..],
        &["transform", "--map", "1.1,0.2,0.1,-0.1,0.9,0,0.2,0.1,1", "--samples", "50"],
        &["transform", "--builtin", "ball", "--dim", "1", "--map", "1.4142135623730951,0,0,0.7071067811865476"],
        &["perturb", "--grid", "33"],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let phi = std::fs::read_to_string(dir.path().join("phi.csv")).unwrap();
    assert!(phi.starts_with("t1,t2,u,u_bar,phi,product_residual\n"));
}

#[test]
fn module_error_exits_with_one() {
    // the ball potential is not a graph function
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["legendre", "--builtin", "ball"]).status.code(), Some(1));
}

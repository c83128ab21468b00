use std::process::{Command, Output};

use serde_json::Value;

fn qfound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = qfound(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn verify_all_is_byte_identical() {
    let a = qfound(&["verify-all", "--seed", "7", "--json"]);
    let b = qfound(&["verify-all", "--seed", "7", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 11);
}

#[test]
fn chsh_optimize_reaches_two_root_two() {
    let v = json(&["chsh", "--optimize", "--json"]);
    let value = v["value"].as_f64().unwrap().abs();
    assert!((value - 2.0 * 2f64.sqrt()).abs() < 1e-6);
    assert!(v["settings"]["a_prime"].is_f64());
}

#[test]
fn hardy_maximum() {
    let v = json(&["hardy", "--json"]);
    // sin²θ* = (3 - √5)/2
    let s2: f64 = (3.0 - 5f64.sqrt()) / 2.0;
    let p = s2 * (1.0 - s2).powi(2) / (2.0 - s2);
    assert!((v["p_star"].as_f64().unwrap() - p).abs() < 1e-9);
    assert!((v["theta_star"].as_f64().unwrap() - s2.sqrt().asin()).abs() < 1e-6);
    for k in ["first", "second", "double_minus"] {
        assert!(v["exclusion_residuals"][k].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn bks_fields() {
    let v = json(&["bks", "--json"]);
    assert_eq!(v["colorings_found"], 0);
    assert_eq!(v["row_products"], "+1,+1,+1");
    assert_eq!(v["col_products"], "+1,+1,-1");
}

#[test]
fn histories_default_and_file() {
    let v = json(&["histories", "--json"]);
    assert_eq!(v["n_histories"], 4);
    assert_eq!(v["mode"], "strong");
    assert!((v["max_violation"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    // qubit, no evolution, ρ0 = |0><0|, z basis twice: trivially consistent
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.json");
    let p0 = "[[[1,0],[0,0]],[[0,0],[0,0]]]";
    let p1 = "[[[0,0],[0,0]],[[0,0],[1,0]]]";
    let id = "[[[1,0],[0,0]],[[0,0],[1,0]]]";
    let text = format!(
        r#"{{"times": [1.0, 2.0], "unitaries": [{id}, {id}], "projector_sets": [[{p0}, {p1}], [{p0}, {p1}]], "rho0": {p0}}}"#
    );
    std::fs::write(&path, text).unwrap();
    let v = json(&["histories", "--family", path.to_str().unwrap(), "--mode", "weak", "--json"]);
    assert_eq!(v["mode"], "weak");
    assert_eq!(v["consistent"], true);
    assert!((v["prob_sum"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"times\": [1.0,\n").unwrap();
    let out = qfound(&["histories", "--family", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3 column 0"));

    assert_eq!(qfound(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(qfound(&["chsh", "--optimize", "--grid", "4"]).status.code(), Some(2));
    assert_eq!(qfound(&["lhv", "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn csv_has_header_and_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decay.csv");
    let out = qfound(&["decoherence", "--g", "0.5", "--photons", "3", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["n,coherence", "0,0.5", "1,0.25", "2,0.125", "3,0.0625"]);
}

#[test]
fn same_seed_same_output() {
    let a = qfound(&["nosignal", "--json", "--seed", "1", "--samples", "10"]);
    let b = qfound(&["nosignal", "--json", "--seed", "1", "--samples", "10"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 1);
    assert_eq!(v["states"], 10);
}

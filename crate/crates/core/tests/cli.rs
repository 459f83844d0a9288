//! End-to-end runs of the `psdaffine` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psdaffine")).args(args).env("RUST_LOG", "off").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// CSV rows keyed by header.
fn rows(out: &Output) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", &data("wishart_jumps.json")]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));

    let bad = run(&["validate", &data("small_b.json")]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL drift_dominance"));

    let missing = run(&["validate", "/nonexistent/params.json"]);
    assert_eq!(code(&missing), 2);

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"version": 1, "d": 2, "alpha": [[1, 0], [0, 1]], "b": [[2, 0], [0, 2]], "drift": {"type": "lyapunov", "beta": [[0, 0]]}}"#).unwrap();
    let out = run(&["validate", broken.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("drift"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn canonical_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    assert_eq!(code(&run(&["validate", &data("wishart_jumps.json"), "--canonical", first.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["validate", first.to_str().unwrap(), "--canonical", second.to_str().unwrap()])), 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn transform_wishart_rows() {
    let out = run(&["transform", &data("wishart.json"), "--u", &data("ugrid.json")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out);
    assert_eq!(rows.len(), 9);
    let half_identity = rows.iter().find(|r| r["t"] == "0.5" && r["u_index"] == "0").unwrap();
    assert_eq!(half_identity["method"], "closed");
    assert!((num(half_identity, "phi_re") - 2.0 * 2f64.ln()).abs() < 1e-12);
    for r in rows.iter().filter(|r| r["u_index"] == "2") {
        assert_eq!((num(r, "value_re"), num(r, "value_im")), (1.0, 0.0));
    }
}

#[test]
fn ode_and_closed_form_agree() {
    let grid = ["--u", &data("ugrid.json"), "-T", "0.25,1,2"];
    let ode = run(&[&["transform", &data("mbajd_jumps.json"), "--method", "ode"][..], &grid[..]].concat());
    let closed = run(&[&["transform", &data("mbajd_jumps.json"), "--method", "closed"][..], &grid[..]].concat());
    assert_eq!((code(&ode), code(&closed)), (0, 0), "{}", String::from_utf8_lossy(&closed.stderr));
    let (ode, closed) = (rows(&ode), rows(&closed));
    assert_eq!((ode.len(), closed.len()), (9, 9));
    for (a, b) in ode.iter().zip(&closed) {
        assert_eq!(a["method"], "ode");
        assert_eq!(b["method"], "closed");
        let (ar, ai, br, bi) = (num(a, "value_re"), num(a, "value_im"), num(b, "value_re"), num(b, "value_im"));
        let scale = br.hypot(bi).max(1e-300);
        assert!((ar - br).hypot(ai - bi) / scale <= 1e-6, "{a:?} {b:?}");
    }
}

#[test]
fn mbajd_starts_at_u() {
    let out = run(&["mbajd", &data("wishart.json"), "--u", &data("ugrid.json"), "-T", "0"]);
    assert_eq!(code(&out), 0);
    for r in rows(&out) {
        assert_eq!((num(&r, "phi_re"), num(&r, "phi_im")), (0.0, 0.0));
    }
    let first = &rows(&out)[1];
    assert_eq!((num(first, "psi_re_00"), num(first, "psi_im_00")), (0.5, 1.0));

    // mu jumps are outside the closed-form family
    assert_eq!(code(&run(&["mbajd", &data("wishart_jumps.json"), "--u", &data("ugrid.json")])), 1);
    assert_eq!(code(&run(&["transform", &data("wishart_jumps.json"), "--u", &data("ugrid.json"), "--method", "closed"])), 1);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", &data("wishart_jumps.json"), "--u", &data("ugrid.json"), "-T", "0.5", "--paths", "500", "--dt", "0.03125", "--seed", "7"];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "2"]].concat());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let zero = rows(&a).into_iter().find(|r| r["u_index"] == "2").unwrap();
    assert_eq!((num(&zero, "mean_re"), num(&zero, "mean_im"), num(&zero, "stderr")), (1.0, 0.0, 0.0));
    assert_eq!(zero["n_steps"], "16");

    let json = run(&[&args[..], &["--out", "json"]].concat());
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v["extra"]["jump_checks"].as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn simulate_rejects_killing() {
    let dir = tempfile::tempdir().unwrap();
    let killed = dir.path().join("killed.json");
    std::fs::write(
        &killed,
        r#"{"version": 1, "d": 2, "alpha": [[1, 0], [0, 1]], "b": [[2, 0], [0, 2]], "drift": {"type": "lyapunov", "beta": [[0, 0], [0, 0]]}, "c": 0.5}"#,
    )
    .unwrap();
    let out = run(&["simulate", killed.to_str().unwrap(), "--u", &data("ugrid.json"), "--paths", "10"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_benchmark_passes() {
    let out = run(&["compare", &data("wishart.json"), "--u", &data("ugrid.json"), "-T", "1", "--paths", "4000", "--dt", "0.0078125", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&out);
    assert_eq!(table.len(), 3);
    for r in &table {
        assert_eq!(r["pass"], "true");
        assert!(num(r, "ode_closed_abs") <= 1e-6);
    }

    // the m/mu jumps take the model outside the closed-form family
    let out = run(&["compare", &data("wishart_jumps.json"), "--u", &data("ugrid.json"), "-T", "1", "--paths", "4000", "--dt", "0.0078125", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for r in &rows(&out) {
        assert_eq!(r["pass"], "true");
        assert_eq!(r["closed_re"], "");
    }

    // no closed form for small_b (not admissible): the gate stops it first
    assert_eq!(code(&run(&["compare", &data("small_b.json"), "--u", &data("ugrid.json")])), 1);
}

#[test]
fn compare_reports_breaches() {
    // rounding alone separates the ODE from the closed form
    let out = run(&["compare", &data("wishart.json"), "--u", &data("ugrid.json"), "-T", "1", "--paths", "100", "--closed-tol", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold breach"));
}

#[test]
fn empty_grid_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("empty.json");
    std::fs::write(&grid, r#"{"u": []}"#).unwrap();
    let out = run(&["transform", &data("wishart.json"), "--u", grid.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rows(&out).is_empty());
}

#[test]
fn bad_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("neg.json");
    std::fs::write(&grid, r#"{"u": [{"re": [[-1, 0], [0, 1]]}], "times": [1]}"#).unwrap();
    assert_eq!(code(&run(&["transform", &data("wishart.json"), "--u", grid.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["transform", &data("wishart.json"), "--u", &data("ugrid.json"), "-T", "-1"])), 2);
}

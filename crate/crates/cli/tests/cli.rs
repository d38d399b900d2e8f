use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equifact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report on stdout")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn factorize_bundled_identity() {
    let trace = tmp("identity2_trace.csv");
    let o = run(&["factorize", "identity2.json", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["passed"], true);
    assert!(r["result"]["bound_certificate"].as_f64().unwrap() <= 1.0 + 1e-8);
    assert!(r["generated_at"].as_u64().is_some());
    for c in r["result"]["certificates"].as_array().unwrap() {
        assert!(c["kind"] == "certified" || c["kind"] == "empirical");
    }
    let csv = std::fs::read_to_string(trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,eps,iteration,F,lower_bound,gap"));
    assert!(lines.count() >= 8);
}

#[test]
fn malformed_weights_exit_2() {
    let o = run(&["factorize", &fixture("bad_weights.json")]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("weights sum"), "{e}");
    assert!(e.contains("line 4"), "{e}");
}

#[test]
fn non_equivariant_map_exit_2() {
    let o = run(&["factorize", &fixture("non_equivariant.json")]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("covariance residual"), "{e}");
}

#[test]
fn missing_file_exit_2() {
    let o = run(&["unitarize", "/nonexistent/instance.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn unitarize_worked_example() {
    let o = run(&["unitarize", "z2_worked", "--oracle"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["outcome"], "pass");
    for route in ["factorization_route", "oracle_route"] {
        assert!(r[route]["worst_residual"].as_f64().unwrap() <= 1e-8, "{route}");
    }
    assert_eq!(r["oracle_route"]["gram_real"]["re"], serde_json::json!([[1.0, 0.5], [0.5, 1.5]]));
}

#[test]
fn unitary_rep_gives_scalar_unitarizer() {
    // The rotation group acts irreducibly on ℝ², so every invariant form is
    // a multiple of the identity.
    let o = run(&["unitarize", "rot4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = &report(&o)["factorization_route"]["unitarizer"]["re"];
    let v: Vec<Vec<f64>> = serde_json::from_value(v.clone()).unwrap();
    assert!(v[0][1].abs() <= 1e-8 && v[1][0].abs() <= 1e-8, "{v:?}");
    assert!((v[0][0] - v[1][1]).abs() <= 1e-8, "{v:?}");
}

#[test]
fn non_injective_exit_3() {
    let o = run(&["unitarize", &fixture("non_injective.json")]);
    assert_eq!(code(&o), 3);
    assert_eq!(report(&o)["outcome"], "non_injective");
    assert!(stderr(&o).contains("not injective"));
}

#[test]
fn word_group_claims_are_empirical() {
    let o = run(&["factorize", &fixture("word_reflection.json"), "--word-radius", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["group_kind"], "empirical");
    assert_eq!(r["group_order"], 5);
    let oracle = run(&["unitarize", &fixture("word_reflection.json"), "--oracle"]);
    assert_eq!(code(&oracle), 0, "{}", stderr(&oracle));
    let r = report(&oracle);
    assert!(r["oracle_skipped"].is_string());
    assert_eq!(r["factorization_route"]["kind"], "empirical");
}

#[test]
fn flags_reach_the_report() {
    let out = tmp("flags.json");
    let o = run(&[
        "factorize", "skew3", "--levels", "3", "--tol", "1e-7", "--seed", "9", "--samples", "50",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["options"]["levels"], 3);
    assert_eq!(r["options"]["tol"], 1e-7);
    assert_eq!(r["options"]["seed"], 9);
    assert_eq!(r["options"]["samples"], 50);
    assert_eq!(r["result"]["eps_levels"].as_array().unwrap().len(), 3);
}

#[test]
fn reports_repeat_modulo_timestamp() {
    let strip = |o: &Output| {
        let mut v = report(o);
        v.as_object_mut().unwrap().remove("generated_at");
        serde_json::to_string(&v).unwrap()
    };
    let a = run(&["unitarize", "klein_weighted", "--oracle", "--seed", "3"]);
    let b = run(&["unitarize", "klein_weighted", "--oracle", "--seed", "3"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn verify_default_seed_passes_in_exact_mode() {
    let o = run(&["verify", "--exact-max", "14"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&o);
    let k = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "khintchine").unwrap();
    assert_eq!(k["kind"], "certified");
    assert_eq!(k["violations"], 0);
}

#[test]
fn verify_seed_42_gaussian_cases() {
    // 200 Gaussian cases are tested at 3 standard errors each, so about 0.5
    // chance exceedances are expected per run. Seed 42 has exactly one.
    let o = run(&["verify", "--seed", "42", "--samples", "100000"]);
    let r = report(&o);
    let gaussian = r["gaussian"].as_array().unwrap();
    assert_eq!(gaussian.len(), 200);
    let within = gaussian.iter().filter(|g| g["pass"] == true).count();
    assert_eq!(within, 199);
    for c in r["checks"].as_array().unwrap() {
        if c["name"] != "gaussian characteristic function" {
            assert_eq!(c["pass"], true, "{c}");
        } else {
            assert!(c["value"].as_f64().unwrap() < 3.5);
        }
    }
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gaussian characteristic function"));
}

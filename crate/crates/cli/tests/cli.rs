//! The binary's interface: exit codes, report envelopes and CSV layout.

use std::process::{Command, Output};

use serde_json::Value;

const PARAMS: &str = r#"{"A":0.4,"B":-0.3,"C":0.5,"D":0.2,"q":0.5}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aw-harness"))
        .args(args)
        .output()
        .expect("run aw-harness")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn validate_accepts_and_rejects() {
    let ok = run(&["validate", "--params", PARAMS]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["schema"], "aw-harness/1");
    assert_eq!(v["command"], "validate");
    assert_eq!(v["result"]["admissible"], true);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);

    // AC = 1.5
    let bad = run(&[
        "validate",
        "--params",
        r#"{"A":1.5,"B":0.1,"C":1.0,"D":0.1,"q":0.5}"#,
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let v = json(&bad);
    assert_eq!(v["result"]["admissible"], false);
    assert!(!v["result"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn config_hash_ignores_input_formatting() {
    let a = json(&run(&["validate", "--params", PARAMS]));
    let b = json(&run(&[
        "validate",
        "--params",
        r#"{ "q": 0.50, "D": 0.2, "C": 0.5, "B": -0.3, "A": 0.4 }"#,
    ]));
    assert_eq!(a["config_hash"], b["config_hash"]);
}

#[test]
fn malformed_input_is_exit_2() {
    assert_eq!(
        run(&["validate", "--params", "{not json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["law", "--params", PARAMS, "--t", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_exit_codes_follow_the_outcome() {
    let ok = run(&["verify", "--suite", "qseries", "--sweep", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["result"]["passed"], true);
    assert_eq!(v["seed"], 0);

    let fail = run(&[
        "verify", "--suite", "measure", "--sweep", "2", "--tol", "1e-300",
    ]);
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(json(&fail)["result"]["passed"], false);
}

#[test]
fn one_path_one_time_is_one_row() {
    let o = run(&["sample", "--params", PARAMS, "--grid", "0.7", "--seed", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# aw-harness/1 ") && lines[1].starts_with("# config_hash="));
    assert_eq!(lines[2], "path_id,t,y,z,x");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("0,0.7,"));
}

#[test]
fn params_round_trip_through_greeks() {
    let o = run(&[
        "params",
        "--from-greek",
        "free",
        "--eta",
        "0.3",
        "--theta",
        "-0.2",
        "--sigma",
        "0.4",
        "--tau",
        "0.5",
    ]);
    assert!(o.status.success());
    let g = &json(&o)["result"]["greeks"];
    for (k, want) in [
        ("eta", 0.3),
        ("theta", -0.2),
        ("sigma", 0.4),
        ("tau", 0.5),
        ("gamma", -0.2),
    ] {
        assert!(
            (g[k].as_f64().unwrap() - want).abs() < 1e-10,
            "{k}: {}",
            g[k]
        );
    }
    // a family's missing greek is an input error
    assert_eq!(
        run(&["params", "--from-greek", "free", "--eta", "0.3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn law_reports_mass_one() {
    let o = run(&["law", "--params", PARAMS, "--t", "0.8", "--points", "11"]);
    assert!(o.status.success());
    let r = &json(&o)["result"];
    let atoms: f64 = r["atoms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["mass"].as_f64().unwrap())
        .sum();
    assert!((r["continuous_mass"].as_f64().unwrap() + atoms - 1.0).abs() < 1e-8);
    assert_eq!(r["density"].as_array().unwrap().len(), 11);
    assert!((r["mean"].as_f64().unwrap() - r["mean_closed_form"].as_f64().unwrap()).abs() < 1e-8);
}

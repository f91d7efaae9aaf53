use std::process::{Command, Output};

use serde_json::Value;

fn moblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moblab"))
        .args(args)
        .env_remove("MOBLAB_THREADS")
        .env_remove("MOBLAB_PREC_BITS")
        .output()
        .unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let out = moblab(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gauss_q2_vanishes() {
    let v = json_ok(&["gauss", "--q", "2", "--a", "1", "--k", "3"]);
    assert_eq!(v["re"], 0.0);
    assert_eq!(v["im"], 0.0);
}

#[test]
fn plan_below_three_quarters_is_rejected() {
    let out = moblab(&["plan", "--x", "1e6", "--y-theta", "0.7", "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta must exceed 3/4"));
}

#[test]
fn plan_at_theta_one() {
    let v = json_ok(&["plan", "--x", "1e6", "--y", "1e6", "--k", "3"]);
    assert_eq!(v["sigma_exact"], "1/12");
    assert_eq!(v["gamma_exact"], "4");
    assert_eq!(v["rho_exact"], "1/768");
}

#[test]
fn classify_zero_is_major() {
    let v = json_ok(&["classify", "--x", "1e6", "--y", "1e5", "--k", "3", "--c1", "1", "--alpha", "0"]);
    assert_eq!(v["label"], "A");
    assert_eq!(v["q"], "1");
    assert!(v["P"].is_number() && v["Q"].is_number() && v["R"].is_number());
}

#[test]
fn decimal_and_fraction_alpha_agree() {
    let base = ["weyl", "--x", "1000", "--y", "500", "--k", "3", "--alpha"];
    let frac = json_ok(&[&base[..], &["1/8"]].concat());
    let dec = json_ok(&[&base[..], &["0.125"]].concat());
    assert_eq!(frac, dec);
    for key in ["re", "im", "abs", "n_terms", "err_bound"] {
        assert!(frac.get(key).is_some(), "{key}");
    }
    assert_eq!(frac["n_terms"], 500);
}

#[test]
fn mobius_sum_at_zero_is_mertens_difference() {
    // M(100) = 1, M(50) = -3
    let v = json_ok(&["mobius-sum", "--x", "50", "--y", "50", "--k", "3", "--alpha", "0"]);
    assert_eq!(v["re"], 4.0);
}

#[test]
fn sieve_csv_and_json() {
    let out = moblab(&["sieve", "--x", "0", "--y", "10", "--emit", "mu", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,value");
    assert_eq!(&lines[1..], ["1,1", "2,-1", "3,-1", "4,0", "5,-1", "6,1", "7,-1", "8,0", "9,0", "10,1"]);
    let v = json_ok(&["sieve", "--x", "0", "--y", "10", "--emit", "tau"]);
    assert_eq!(v["values"][5]["n"], 6);
    assert_eq!(v["values"][5]["value"], 4);
}

#[test]
fn characters_and_wk() {
    let v = json_ok(&["characters", "--q", "8"]);
    assert_eq!(v["count"], 4);
    assert_eq!(v["primitive_count"], 2);
    let v = json_ok(&["characters", "--q", "8", "--list-primitive"]);
    assert_eq!(v["characters"].as_array().unwrap().len(), 2);
    let v = json_ok(&["wk", "--q", "1", "--k", "3"]);
    assert_eq!(v["value"], 1.0);
}

#[test]
fn lemma31_report_shape() {
    let v = json_ok(&["lemma31", "--x", "1000", "--y", "500", "--k", "3", "--q", "3", "--a", "1", "--lambda", "0"]);
    assert!(v["rhs"].as_f64().unwrap() > 0.0);
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);
}

#[test]
fn reconstruct_with_and_without_thresholds() {
    let v = json_ok(&["reconstruct", "--x", "10000", "--y", "3000", "--k", "3", "--alpha", "5/17", "--U", "10", "--V", "30"]);
    assert_eq!(v["within_tolerance"], true);
    let v = json_ok(&["reconstruct", "--x", "10000", "--y", "10000", "--k", "4", "--alpha", "0.3"]);
    assert_eq!(v["within_tolerance"], true);
}

#[test]
fn errors_map_to_exit_codes() {
    assert_eq!(moblab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(moblab(&["gauss", "--q", "0", "--a", "1", "--k", "3"]).status.code(), Some(2));
    assert_eq!(moblab(&["weyl", "--x", "0", "--y", "10", "--k", "3", "--alpha", "zz"]).status.code(), Some(2));
    let out = moblab(&["weyl", "--x", "0", "--y", "1e12", "--k", "3", "--alpha", "1/3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"budget_terms": 100}"#).unwrap();
    let out = moblab(&["--config", cfg.to_str().unwrap(), "weyl", "--x", "0", "--y", "1000", "--k", "3", "--alpha", "1/3"]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let out = moblab(&["--config", cfg.to_str().unwrap(), "wk", "--q", "5", "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_moblab"))
        .args(["weyl", "--x", "0", "--y", "10", "--k", "3", "--alpha", "0.1"])
        .env("MOBLAB_PREC_BITS", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_report_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"x": 20000, "theta_list": [0.85], "k_list": [3],
            "alpha_grid": {"uniform": 5, "q_max": 3, "deltas": [{"per_r": 1.0}]}, "seed": 9}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let v = json_ok(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
        (v, std::fs::read(out_path).unwrap())
    };
    let (v, csv1) = run("a.csv");
    let (_, csv2) = run("b.csv");
    assert_eq!(csv1, csv2);
    // 4 fractions, 4 perturbed, 5 uniform
    assert_eq!(v["rows"], 13);
    let (_, json) = run("c.json");
    let parsed: Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 13);
}

#[test]
fn sweep_over_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"x": 1000000, "theta_list": [0.9], "k_list": [3], "budget_terms": 10}"#).unwrap();
    let out = moblab(&["sweep", "--spec", spec.to_str().unwrap(), "--out", dir.path().join("r.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

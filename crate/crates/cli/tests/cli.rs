use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn input(name: &str, doc: Value) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sp-copula"))
        .args(args)
        .env("SP_COPULA_THREADS", "2")
        .output()
        .unwrap()
}

fn json_out(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn eta_of_shuffle() {
    let spec = input("cli_shuffle.json", json!({"copula": {"node": "shuffle", "gamma": 0.3}}));
    let out = run(&["eta", "--spec", &spec, "--seed", "9"]);
    assert!(out.status.success());
    let v = json_out(&out);
    assert_eq!(v["eta"], 0.3);
    assert_eq!(v["xi"], 0.0);
    assert_eq!(v["method"], "closed_form");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["workers"], 2);
    for key in ["samples", "tool_version"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn classify_shuffle_at_its_level() {
    let spec = input("cli_classify.json", json!({"copula": {"node": "shuffle", "gamma": 0.3}}));
    let v = json_out(&run(&["classify", "--spec", &spec, "--gamma", "0.3"]));
    assert_eq!(v["in_L_gamma"], true);
    assert_eq!(v["in_B_gamma"], true);
    let v = json_out(&run(&["classify", "--spec", &spec, "--gamma", "0.31"]));
    assert_eq!(v["in_L_gamma"], false);
}

#[test]
fn order_reports_witness() {
    let spec = input(
        "cli_order.json",
        json!({"g1": {"kind": "exponential", "rate": 1.0}, "g2": {"kind": "exponential", "rate": 2.0}}),
    );
    let v = json_out(&run(&["order", "--spec", &spec, "--relation", "lr"]));
    assert_eq!(v["relation"], "lr");
    assert_eq!(v["holds"], false);
    assert!(v["witness"].is_number());
}

#[test]
fn rank_gaussian_prospects() {
    let spec = input(
        "cli_rank.json",
        json!({"target": {"kind": "normal", "mean": 0.0, "sd": 1.0},
               "prospects": [
                   {"name": "A", "marginal": {"kind": "normal", "mean": 1.0, "sd": 1.0}, "copula": {"node": "gaussian", "rho": 0.0}},
                   {"name": "B", "marginal": {"kind": "normal", "mean": 2.0, "sd": 1.0}, "copula": {"node": "gaussian", "rho": 0.0}}]}),
    );
    let v = json_out(&run(&["rank", "--spec", &spec]));
    assert_eq!(v["rows"][0]["name"], "B");
    assert!((v["rows"][0]["eta_or_bound"].as_f64().unwrap() - 0.92135).abs() < 1e-5);
    assert!((v["rows"][1]["eta_or_bound"].as_f64().unwrap() - 0.76025).abs() < 1e-5);
    let csv = String::from_utf8(run(&["rank", "--spec", &spec, "--output", "csv"]).stdout).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("B,0.921350396475,exact,0")), "{csv}");
}

#[test]
fn sample_csv_rows() {
    let spec = input("cli_sample.json", json!({"copula": {"node": "comonotone"}}));
    let out = run(&["sample", "--spec", &spec, "--samples", "10", "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "u,v,component,structural_tie");
    assert_eq!(rows.len(), 11);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[0], f[1]);
        assert_eq!(f[2], "singular");
    }
}

#[test]
fn curve_is_increasing() {
    let out = run(&["curve"]);
    let v = json_out(&out);
    let etas: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p["eta"].as_f64().unwrap()).collect();
    assert_eq!(etas.len(), 19);
    assert!(etas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn schema_violations_exit_1() {
    let bad = input("cli_bad.json", json!({"copula": {"node": "gaussian", "rho": 1.5}}));
    assert_eq!(run(&["eta", "--spec", &bad]).status.code(), Some(1));
    let unknown = input("cli_unknown.json", json!({"copula": {"node": "frank", "theta": 2}}));
    assert_eq!(run(&["eta", "--spec", &unknown]).status.code(), Some(1));
    assert_eq!(run(&["eta"]).status.code(), Some(1));
    assert_eq!(run(&["eta", "--output", "xml"]).status.code(), Some(1));
}

#[test]
fn borderline_level_is_inconclusive() {
    let spec = input(
        "cli_mc.json",
        json!({"copula": {"node": "mo_survival", "alpha1": 0.4, "alpha2": 0.2},
               "g1": {"kind": "normal", "mean": 0.0, "sd": 1.0},
               "g2": {"kind": "normal", "mean": 0.2, "sd": 1.0}}),
    );
    let first = json_out(&run(&["eta", "--spec", &spec, "--samples", "100000"]));
    assert_eq!(first["method"], "monte_carlo");
    let eta = first["eta"].as_f64().unwrap().to_string();
    let out = run(&["eta", "--spec", &spec, "--samples", "100000", "--gamma", &eta]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_out(&out)["holds"], "inconclusive");
    let clear = run(&["eta", "--spec", &spec, "--samples", "100000", "--gamma", "0.1"]);
    assert_eq!(clear.status.code(), Some(0));
    assert_eq!(json_out(&clear)["holds"], true);
}

#[test]
fn worker_count_does_not_change_results() {
    let spec = input(
        "cli_workers.json",
        json!({"copula": {"node": "order_statistics"},
               "g1": {"kind": "atoms", "points": [[0.0, 0.5], [1.0, 0.5]]},
               "g2": {"kind": "exponential", "rate": 1.0}}),
    );
    let with = |w: &str| {
        Command::new(env!("CARGO_BIN_EXE_sp-copula"))
            .args(["eta", "--spec", &spec, "--samples", "300000", "--seed", "4", "--output", "csv"])
            .env("SP_COPULA_THREADS", w)
            .output()
            .unwrap()
    };
    let strip = |o: Output| String::from_utf8(o.stdout).unwrap().lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(with("1")), strip(with("3")));
}

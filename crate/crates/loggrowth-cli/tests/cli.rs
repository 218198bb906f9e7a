use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loggrowth::ore::TwistedPoly;
use loggrowth::padics::{PadicContext, PadicScalar};
use loggrowth::rat::qi;
use loggrowth::series::{LaurentSeries, LogSeries};
use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loggrowth"))
        .args(args)
        .env_remove("LOGGROWTH_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_log_x_against_sigma_minus_q() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ore", "factors", "--slopes", "1", "--constant"]);
    assert_eq!(out.status.code(), Some(0));
    let f = write(dir.path(), "f.json", &stdout_json(&out));
    let ctx = PadicContext::new(5, 1, 30).unwrap();
    let y = write(dir.path(), "y.json", &serde_json::to_value(LogSeries::log_x(&ctx).to_json()).unwrap());
    let out = run(&["classify", "--f", s(&f), "--y", s(&y), "--depth", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = stdout_json(&out);
    assert_eq!(rep["classification"], json!({"kind": "ExactlyLogGrowth", "slope": "1"}));
}

#[test]
fn newton_polygon_of_two_term_series() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = PadicContext::new(5, 1, 30).unwrap();
    let f = LaurentSeries::polynomial(&ctx, [(1, PadicScalar::one(&ctx)), (-1, PadicScalar::from_int(&ctx, 5))]);
    let path = write(dir.path(), "s.json", &serde_json::to_value(f.to_json()).unwrap());
    let csv = dir.path().join("np.csv");
    let out = run(&["np", "--series", s(&path), "-r", "1", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["slopes"], json!([["1/2", "1"]]));
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("x,y\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[{\"window\": [0, 1],").unwrap();
    let out = run(&["ore", "star", "--f", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:1:"), "{err}");

    assert_eq!(run(&["--p", "6", "ore", "factors", "--slopes", "0"]).status.code(), Some(3));

    let one = write(dir.path(), "f.json", &stdout_json(&run(&["ore", "factors", "--slopes", "1", "--constant"])));
    let out = run(&["frobsolve", "--f", s(&one), "--init", "1"]);
    assert_eq!(out.status.code(), Some(4));

    // sigma^2 + p sigma + 1: the middle point lies above the polygon
    let ctx = PadicContext::new(5, 1, 30).unwrap();
    let f = TwistedPoly::from_rationals(&ctx, &[qi(1), qi(5), qi(1)]);
    let path = write(dir.path(), "g.json", &serde_json::to_value(f.to_json()).unwrap());
    let out = run(&["ore", "star", "--f", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["satisfied"], json!(false));
}

#[test]
fn infeasible_ladder_depth() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = PadicContext::new(5, 1, 30).unwrap();
    let y = LogSeries::from_series(LaurentSeries::power_series(&ctx, vec![PadicScalar::one(&ctx); 100]).with_floor(qi(0)));
    let path = write(dir.path(), "y.json", &serde_json::to_value(y.to_json()).unwrap());
    assert_eq!(run(&["ladder", "--y", s(&path), "--depth", "8"]).status.code(), Some(3));
    let csv = dir.path().join("l.csv");
    let out = run(&["ladder", "--y", s(&path), "--depth", "2", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("m,r,exponent,certified\n"));
    assert!((2..=4).contains(&text.lines().count()), "{text}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = run(&["kedlaya", "--slopes", "0,0,1", "--seed", "7"]);
    let b = run(&["kedlaya", "--slopes", "0,0,1", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["generic"], json!(true));
    let c = run(&["kedlaya", "--slopes", "0,0", "--constants"]);
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn log_module_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = PadicContext::new(5, 1, 30).unwrap();
    let c = |v: i64| serde_json::to_value(LaurentSeries::constant(PadicScalar::from_int(&ctx, v)).to_json()).unwrap();
    let z = serde_json::to_value(LaurentSeries::zero(&ctx).to_json()).unwrap();
    let module = json!({
        "G": [[z, c(1)], [z, z]],
        "F": [[c(1), z], [z, c(5)]],
        "log": true,
    });
    let path = write(dir.path(), "m.json", &module);
    let out = run(&["ode", "compare", "--module", s(&path), "-T", "1024"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = stdout_json(&out);
    assert_eq!(rep["breaks"], json!([["0", 1], ["1", 1]]));
    let rows = rep["comparison"]["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["status"] == "Equal"));
    let table = run(&["ode", "filtration", "--module", s(&path), "-T", "1024", "--table"]);
    assert!(String::from_utf8_lossy(&table.stdout).starts_with("break"));
}

#[test]
fn hypergeometric_ordinary_disc() {
    let out = run(&["ode", "filtration", "--hypergeometric", "2", "-T", "10000", "--prec", "40", "--max-den", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = stdout_json(&out);
    assert_eq!(rep["breaks"], json!([["0", 1], ["1", 1]]));
    assert_eq!(rep["module"]["ordinary"], json!(true));
}

use std::fs;
use std::process::{Command, Output};

use geored::registry::SOURCES;

fn geored(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geored")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn source(id: &str) -> &'static str {
    SOURCES.iter().find(|(i, _)| *i == id).unwrap().1
}

#[test]
fn list_prints_every_id() {
    let o = geored(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let ids: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(ids.len(), 10);
    assert!(ids.iter().any(|i| i == "coupled_strings"));
}

#[test]
fn verify_passes_with_exit_zero() {
    let o = geored(&["verify", "--scenario", "coupled_strings", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scenario"], "coupled_strings");
    assert_eq!(v["samples"], 20);
    assert_eq!(v["verdict"], true);
}

#[test]
fn subcommands_select_stages() {
    for (cmd, id, stage) in [
        ("reeb", "canonical_kcontact", "structure"),
        ("conditions", "product_contact", "conditions"),
        ("reduce", "gl2_example", "reduction"),
        ("probe-group", "h2r_symplectised", "kernel"),
    ] {
        let o = geored(&[cmd, "--scenario", id, "--samples", "10"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let stages: Vec<&str> = v["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
        assert_eq!(stages.last(), Some(&stage), "{cmd}");
    }
}

#[test]
fn text_output_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let o = geored(&["reeb", "--scenario", "canonical_kcontact", "--format", "text", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("canonical_kcontact: PASS"), "{text}");
    assert!(text.contains("expect reeb"), "{text}");
}

#[test]
fn failed_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gl2_bad.toml");
    fs::write(&path, source("gl2_example").replace("\"d(t) - x4 d(x3)\"", "\"d(t) + x4 d(x3)\"")).unwrap();
    let o = geored(&["reduce", "--file", path.to_str().unwrap(), "--samples", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], false);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, source("canonical_kcontact").replace("[chart]", "[chart\n")).unwrap();
    let o = geored(&["verify", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("parse error at line"), "{}", stderr(&o));

    let o = geored(&["verify", "--scenario", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scenario"));

    let o = geored(&["verify", "--scenario", "coupled_strings", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn all_scenarios_with_jobs_are_deterministic() {
    let a = geored(&["verify", "--samples", "10", "--jobs", "1"]);
    let b = geored(&["verify", "--samples", "10", "--jobs", "4"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 10);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let res = dir.path().join("res.csv");
    let o = geored(&[
        "simulate",
        "--scenario",
        "damped_wave",
        "--grid",
        "32x40",
        "--T",
        "0.5",
        "--dt",
        "0.0125",
        "--out",
        grid.to_str().unwrap(),
        "--residuals",
        res.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&grid).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,u,pt,px"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41 * 32);
    let first: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(first.len(), 5);
    let mantissa = first[1].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{}", first[1]);
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 0.5);
    let res = fs::read_to_string(&res).unwrap();
    assert!(res.starts_with("t,residual,energy\n"));
    assert_eq!(res.lines().count(), 1 + 39);
}

#[test]
fn simulate_rejects_inconsistent_dt() {
    let o = geored(&["simulate", "--scenario", "damped_wave", "--grid", "32x40", "--T", "0.5", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("disagrees"), "{}", stderr(&o));
    let o = geored(&["simulate", "--scenario", "damped_wave", "--grid", "32by40"]);
    assert_eq!(o.status.code(), Some(2));
    let o = geored(&["simulate", "--scenario", "gl2_example", "--grid", "32x40", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

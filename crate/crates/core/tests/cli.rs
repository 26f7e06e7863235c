use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use roadflow::io::scenario_to_json;
use roadflow::scenarios::scenario_document;

fn roadflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadflow")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_names_every_builtin() {
    let o = roadflow(&["list"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 7);
    assert!(stdout(&o).contains("synthetic_large"));
}

#[test]
fn exported_scenario_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = roadflow(&["export", "five_arc"]);
    assert!(o.status.success());
    let file = dir.path().join("five_arc.json");
    fs::write(&file, stdout(&o)).unwrap();
    let v = roadflow(&["validate", file.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
    assert!(stdout(&v).contains("5 arcs, 2 junctions"));
}

#[test]
fn diagnostics_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = scenario_document("two_in_one_out_const").unwrap();
    doc.network.junctions[0].q = None;
    let file = dir.path().join("bad.json");
    fs::write(&file, scenario_to_json(&doc)).unwrap();
    let o = roadflow(&["validate", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`J`"), "{}", stderr(&o));

    fs::write(&file, "{ not json").unwrap();
    assert_eq!(roadflow(&["validate", file.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // violates the per-path CFL condition
    let o = roadflow(&["run", "--scenario", "one_in_two_out", "--dt", "0.04", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("CFL") || stderr(&o).contains("dt"), "{}", stderr(&o));
    assert_eq!(roadflow(&["validate", "/nonexistent/scenario.json"]).status.code(), Some(2));
}

#[test]
fn run_writes_requested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = roadflow(&[
        "run",
        "--scenario",
        "two_in_one_out_const",
        "--solver",
        "all",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["profile_classical.csv", "profile_multipath.csv", "profile_local.csv", "timeseries_J.csv", "report.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let series = fs::read_to_string(out.join("timeseries_J.csv")).unwrap();
    assert_eq!(series.lines().count(), 242);

    let only = dir.path().join("only");
    let o = roadflow(&[
        "run",
        "--scenario",
        "one_in_two_out",
        "--solver",
        "classical",
        "--emit",
        "report",
        "--out",
        only.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<_> = fs::read_dir(&only).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("report.json")]);
}

#[test]
fn run_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cfg_out");
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"scenario":"single_road_riemann","solver":"multipath","t_f":0.25,"out":{:?},"emit":["profiles"]}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = roadflow(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(Path::new(&out.join("profile_multipath.csv")).is_file());
}

#[test]
fn compare_prints_the_report() {
    let o = roadflow(&["compare", "one_in_two_out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scenario"], "one_in_two_out");
    assert_eq!(v["solvers"].as_array().unwrap().len(), 3);
}

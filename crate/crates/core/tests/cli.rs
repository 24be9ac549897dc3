//! End-to-end runs of the `isospec` binary.

use std::path::Path;
use std::process::{Command, Output};

fn isospec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospec"))
        .args(args)
        .env("ISOSPEC_LOG", "error")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn help_lists_every_command() {
    let out = isospec(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["validate", "construct", "verify", "spectrum", "hierarchy", "convert-coords", "presets"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(isospec(&["validate", "--bogus"]).status.code(), Some(1));
}

#[test]
fn presets_table_has_ten_passing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["presets", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(dir.path(), "presets.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn validate_reports_constraints() {
    let ok = isospec(&["validate", "--a", "1,0,0", "--c", "0,0,1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["report"]["all_satisfied"], true);
    let bad = isospec(&["validate", "--a", "1,0,0", "--c", "1,0,0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn construct_then_verify_from_one_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    std::fs::write(&cfg, r#"{"a": [0, 1], "c": 1, "f": "eta", "h": "2/kappa^2 + 2*kappa^2"}"#).unwrap();
    let out = dir.path().join("out");
    let (cfg, out_s) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(isospec(&["construct", "--config", cfg, "--out", out_s]).status.code(), Some(0));
    let pair: serde_json::Value = serde_json::from_str(&read(&out, "pair.json")).unwrap();
    assert_eq!(pair["metadata"]["n"], 2);
    assert!(read(&out, "samples.csv").starts_with("x1,x2,V0,V1,L0,singular"));

    let v = isospec(&["verify", "--config", cfg, "--center", "-1,0.5", "--out", out_s]);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    let report = json(&v);
    assert_eq!(report["passed"], true);
    let order = report["intertwining"]["order"].as_f64().unwrap();
    assert!((order - 2.0).abs() < 0.2, "{order}");
    assert!(read(&out, "convergence.csv").lines().count() > 4);
}

#[test]
fn spectrum_pairs_oscillator_levels() {
    let out = isospec(&["spectrum", "--f", "xi", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["max_deviation"].as_f64().unwrap() < 2e-3, "{r}");
}

#[test]
fn convert_coords_reads_a_points_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "x,y\n0,0\n0.5,-0.25\n1,0\n").unwrap();
    let out = isospec(&[
        "convert-coords",
        "--a",
        "0,1",
        "--c",
        "1",
        "--points",
        pts.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["points"], 3);
    assert_eq!(r["singular"], 1);
}

#[test]
fn hierarchy_chain_deletes_oscillator_levels() {
    let out = isospec(&["hierarchy", "--xi-potential", "xi^2", "--seeds", "0,0", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

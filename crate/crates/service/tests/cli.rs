mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

const CLOCK: &str = "2025-06-01T12:00:00Z";

fn pvscan(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvscan"))
        .arg("--fixtures")
        .arg(fixtures())
        .arg("--data-dir")
        .arg(data)
        .args(["--clock", CLOCK])
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("pvscan runs")
}

fn ok(data: &Path, args: &[&str]) -> String {
    let out = pvscan(data, args);
    assert!(out.status.success(), "pvscan {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn features(geojson: &str) -> Vec<serde_json::Value> {
    let v: serde_json::Value = serde_json::from_str(geojson).unwrap();
    v["features"].as_array().unwrap().clone()
}

#[test]
fn scan_export_curate_round_trip() {
    let data = tempfile::tempdir().unwrap();
    let job: serde_json::Value = serde_json::from_str(&ok(data.path(), &["scan", "--place", "Fixtureville", "--scan", "town"])).unwrap();
    assert_eq!(job["state"], "done");
    assert_eq!(job["progress"]["done"], 3);
    assert_eq!(job["summary"]["n_panels"], 3);

    let panels = features(&ok(data.path(), &["export", "--scan", "town"]));
    assert_eq!(panels.len(), 3);
    let summary: serde_json::Value = serde_json::from_str(&ok(data.path(), &["export", "--scan", "town", "--summary"])).unwrap();
    assert_eq!(summary["n_buildings"], 3);

    let reject = panels.iter().find(|f| f["properties"]["confidence"] == 0.70).unwrap()["properties"]["panel_id"].as_str().unwrap().to_string();
    let log = data.path().join("review.log");
    std::fs::write(&log, format!("2025-06-02T08:00:00Z {reject} rejected alice\n")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&ok(data.path(), &["curate", "--scan", "town", "--apply", log.to_str().unwrap()])).unwrap();
    assert_eq!(report["applied"], 1);

    let accepted = features(&ok(data.path(), &["export", "--scan", "town", "--status", "accepted"]));
    assert_eq!(accepted.len(), 2);
    assert!(accepted.iter().all(|f| f["properties"]["panel_id"] != reject.as_str()));
    let rejected = features(&ok(data.path(), &["export", "--scan", "town", "--status", "rejected"]));
    assert_eq!(rejected.len(), 1);
}

#[test]
fn detect_prints_the_building_panels() {
    let data = tempfile::tempdir().unwrap();
    let out = ok(data.path(), &["detect", "--lat", "47.52", "--lon", "8.54"]);
    let fs = features(&out);
    assert_eq!(fs.len(), 2);
    assert!(fs.iter().all(|f| f["properties"]["building_id"] == B1));
}

#[test]
fn profile_output_is_deterministic() {
    let data = tempfile::tempdir().unwrap();
    let args = ["profile", "--lat", "47.52", "--lon", "8.54", "--area-m2", "12.5"];
    let a = ok(data.path(), &args);
    let b = ok(data.path(), &args);
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("timestamp,power_w"));
    assert_eq!(lines.count(), 8760);

    let file = data.path().join("p.csv");
    let mut with_output = args.to_vec();
    with_output.extend(["-o", file.to_str().unwrap()]);
    assert_eq!(ok(data.path(), &with_output), "");
    assert_eq!(std::fs::read_to_string(file).unwrap(), a);
}

#[test]
fn import_loads_exported_panels_into_another_scan() {
    let data = tempfile::tempdir().unwrap();
    ok(data.path(), &["scan", "--bbox", "47.5195,8.5395,47.5215,8.5415", "--scan", "src"]);
    let exported = data.path().join("src.geojson");
    ok(data.path(), &["export", "--scan", "src", "-o", exported.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&ok(data.path(), &["import", "--scan", "copy", exported.to_str().unwrap()])).unwrap();
    assert_eq!(report["inserted"], 3);
    let again: serde_json::Value = serde_json::from_str(&ok(data.path(), &["import", "--scan", "copy", exported.to_str().unwrap()])).unwrap();
    assert_eq!((again["inserted"].as_u64(), again["updated"].as_u64()), (Some(0), Some(3)));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let data = tempfile::tempdir().unwrap();
    for args in [
        vec!["export", "--scan", "missing"],
        vec!["detect", "--lat", "10", "--lon", "10"],
        vec!["scan", "--bbox", "1,2,3"],
        vec!["profile", "--lat", "47.5", "--lon", "8.5", "--area-m2", "-1"],
    ] {
        let out = pvscan(data.path(), &args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!String::from_utf8_lossy(&out.stderr).trim().is_empty(), "{args:?} printed nothing");
    }
}

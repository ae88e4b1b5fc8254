use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logderiv"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn poles_doc(angles: &[f64]) -> String {
    serde_json::json!({ "n": angles.len(), "angles": angles }).to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_equally_spaced_passes() {
    let dir = TempDir::new().unwrap();
    let angles: Vec<f64> = (1..=4).map(|k| std::f64::consts::TAU * k as f64 / 4.0).collect();
    let poles = write(dir.path(), "eq4.json", &poles_doc(&angles));
    let out = run(&["verify", "--poles", poles.to_str().unwrap(), "--p", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["allPassed"], true);
    assert_eq!(report["lpBounds"]["bound"].as_f64().unwrap(), 1.0 / 192.0);
}

#[test]
fn verify_real_pole_is_divergent_and_passes() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "one.json", &poles_doc(&[0.0]));
    let out = run(&["verify", "--poles", poles.to_str().unwrap(), "--p", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["divergent"], true);
    assert_eq!(report["lpBounds"]["weighted"]["divergent"], true);
}

#[test]
fn verify_csv_rows() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[0.4, 2.0, 4.1]));
    let out = run(&["verify", "--poles", poles.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "poles_hash,n,p,weighted,value,error,divergent,panels");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].contains(",3,1,true,"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"n\": 2, \"angles\": [0.1");
    for cmd in ["verify", "measure", "witness", "norms"] {
        let out = run(&[cmd, "--poles", bad.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["verify", "--poles", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_delta_and_output_dir_exit_2() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[1.0]));
    let p = poles.to_str().unwrap();
    assert_eq!(run(&["verify", "--poles", p, "--delta", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["witness", "--poles", p, "--delta", "0.7"]).status.code(), Some(2));
    let out = dir.path().join("no/such/dir/out.json");
    assert_eq!(run(&["verify", "--poles", p, "--out", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn witness_double_pole_at_one() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[0.0, 0.0]));
    let out = run(&["witness", "--poles", poles.to_str().unwrap(), "--delta", "0.25"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    let cert = &doc["certificate"];
    assert_eq!(cert["caseTag"], "Case1Plus");
    assert!((cert["rho"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-15);
    let piece = &cert["witness"]["intervals"][0];
    assert!((piece[0].as_f64().unwrap() - 0.776739).abs() < 1e-5);
    assert!((piece[1].as_f64().unwrap() - 11.0 / 12.0).abs() < 1e-9);
    assert_eq!(doc["verification"]["passed"], true);
}

#[test]
fn witness_case_two_at_i() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[std::f64::consts::FRAC_PI_2; 4]));
    let out = run(&["witness", "--poles", poles.to_str().unwrap(), "--delta", "0.2", "--m", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["certificate"]["caseTag"], "Case2");
    let cut = doc["certificate"]["witness"]["intervals"][1][0].as_f64().unwrap();
    assert!((cut - 0.998206).abs() < 1e-6);
    assert_eq!(doc["verification"]["passed"], true);
}

#[test]
fn witness_sound_for_each_m() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[0.2, 1.3, 2.9, 4.4, 5.8]));
    for m in ["1", "3"] {
        let out = run(&["witness", "--poles", poles.to_str().unwrap(), "--delta", "0.3", "--m", m]);
        assert_eq!(out.status.code(), Some(0), "m = {m}");
    }
}

#[test]
fn measure_reports_window_and_bound() {
    let dir = TempDir::new().unwrap();
    let poles = write(dir.path(), "p.json", &poles_doc(&[std::f64::consts::FRAC_PI_2]));
    let out = run(&["measure", "--poles", poles.to_str().unwrap(), "--delta", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!((doc["measure"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(doc["holds"], true);
    let out = run(&["measure", "--poles", poles.to_str().unwrap(), "--delta", "0.6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_json(&out)["holds"].is_null());
}

#[test]
fn sharpness_brackets_at_p1() {
    let out = run(&["sharpness", "--n", "4", "--p", "1", "--samples", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let lower: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(lower, 1.0 / 192.0);
    }
}

#[test]
fn norms_accepts_both_schemas() {
    let dir = TempDir::new().unwrap();
    let poly = write(dir.path(), "poly.json", r#"{"leading": [1.0, 0.0], "zeros": [[0.0, 1.0], [0.0, -1.0]]}"#);
    let out = run(&["norms", "--poles", poly.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["allPassed"], true);
    assert!((doc["gDelta"]["measurePlus"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let poles = write(dir.path(), "poles.json", &poles_doc(&[0.5, 2.5, 4.0]));
    let out = run(&["norms", "--poles", poles.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["n"], 3);
}

#[test]
fn explore_writes_record_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("study.json");
    let out = run(&[
        "explore", "--n", "3", "--objective", "lpw", "--seeds", "2", "--budget", "200", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let record: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(record["bestValue"].as_f64().unwrap() >= 1.0 / 192.0);
    assert_eq!(record["wallTime"].as_f64().unwrap(), 0.0);
    let sidecar = dir.path().join("study.json.angles.json");
    let angles: Value = serde_json::from_str(&fs::read_to_string(sidecar).unwrap()).unwrap();
    assert_eq!(angles["n"], 3);
}

#[test]
fn explore_area_single_pole_has_zero_gap() {
    let out = run(&["explore", "--n", "1", "--objective", "area", "--seeds", "1", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert!(record["gap"].as_f64().unwrap().abs() < 2e-6);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let mut bodies = Vec::new();
    for i in 0..2 {
        let sharp = dir.path().join(format!("sharp{i}.csv"));
        let study = dir.path().join(format!("study{i}.csv"));
        let s = run(&[
            "sharpness", "--n", "3", "--samples", "4", "--seed", "7", "--format", "csv", "--out",
            sharp.to_str().unwrap(),
        ]);
        assert_eq!(s.status.code(), Some(0));
        let e = run(&[
            "explore", "--n", "2", "--objective", "lp", "--seeds", "3", "--budget", "150", "--seed", "7",
            "--format", "csv", "--out", study.to_str().unwrap(),
        ]);
        assert_eq!(e.status.code(), Some(0));
        bodies.push((
            fs::read(&sharp).unwrap(),
            fs::read(&study).unwrap(),
            fs::read(dir.path().join(format!("study{i}.csv.angles.json"))).unwrap(),
        ));
    }
    assert_eq!(bodies[0], bodies[1]);
}

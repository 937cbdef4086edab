use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kropina-lab"));
    c.env_remove("KROPINA_LAB_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Report minus the wall time, which is the only field allowed to vary.
fn stable(mut v: Value) -> Value {
    v["summary"]["wall_time_s"] = Value::Null;
    v
}

const SMALL: &str = r#"{
  "seed": 3,
  "metric": {"kind": "catalog", "name": "riemannian", "dim": 3},
  "hvector": {"generator": "random", "c": [0.9], "rho": 0.5, "scale": 0.5},
  "points": {"count": 6, "box": [-0.5, 0.5]},
  "checks": ["star-closed-forms", "difference-tensor", "homogeneity"]
}"#;

#[test]
fn demo_passes_and_reports_json() {
    let o = run(&["demo", "theorem31"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    assert!(r["summary"]["records"].as_u64().unwrap() > 0);
    assert_eq!(r["summary"]["failed"].as_u64(), Some(0));
    assert_eq!(r["provenance"]["scenario_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_demo_is_invalid_input() {
    let o = run(&["demo", "no-such-thing"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("theorem31"));
}

#[test]
fn tight_tolerance_gives_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.scn", SMALL);
    let o = run(&["run", &path, "--tol-rel", "1e-300"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
    assert!(json(&o)["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn malformed_and_unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.scn", "{\n  \"metric\": [\n");
    let o = run(&["run", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let typo = write(dir.path(), "typo.scn", &SMALL.replace("\"checks\"", "\"chekcs\""));
    let o = run(&["run", &typo]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("chekcs"), "{}", stderr(&o));

    let o = run(&["run", dir.path().join("missing.scn").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn point_outside_beta_cone_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
      "metric": {"kind": "catalog", "name": "euclidean", "dim": 2},
      "hvector": {"mode": "pointwise", "b": [1.0, 0.0], "rho": 0.5},
      "points": [{"x": [0, 0], "y": [1, 0.5]}, {"x": [0, 0], "y": [-1, 0.2]}],
      "checks": ["star-closed-forms"]
    }"#;
    let o = run(&["run", &write(dir.path(), "cone.scn", body)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("point 1") && err.contains("beta"), "{err}");
}

#[test]
fn field_only_checks_need_field_mode() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("\"homogeneity\"", "\"geodesic\"");
    let o = run(&["run", &write(dir.path(), "g.scn", &body)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geodesic"), "{}", stderr(&o));
}

#[test]
fn list_catalog_is_complete_and_stable() {
    let a = run(&["list-catalog"]);
    let b = run(&["list-catalog"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for word in ["euclidean", "riemannian-warped", "randers", "zero-bcov", "projective-constructed", "theorem41", "geodesic"] {
        assert!(text.contains(word), "missing {word}");
    }
}

#[test]
fn seed_flag_controls_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.scn", SMALL);
    let a = json(&run(&["run", &path, "--seed", "11"]));
    let b = json(&run(&["run", &path, "--seed", "11"]));
    let c = json(&run(&["run", &path, "--seed", "12"]));
    assert_eq!(a["provenance"]["seed"].as_u64(), Some(11));
    assert_eq!(stable(a.clone()), stable(b));
    assert_ne!(a["points"], c["points"]);
}

#[test]
fn worker_count_does_not_change_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "s.scn", SMALL);
    let one = bin().args(["run", &path]).env("KROPINA_LAB_JOBS", "1").output().unwrap();
    let four = bin().args(["run", &path]).env("KROPINA_LAB_JOBS", "4").output().unwrap();
    assert_eq!(stable(json(&one)), stable(json(&four)));
}

#[test]
fn report_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["demo", "star-forms", "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["scenario"].as_str(), Some("star-forms"));
}

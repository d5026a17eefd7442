mod common;

use std::fs;
use std::path::Path;

use common::*;
use fvdlens::distortion::{distort_clipset, DistortionSpec, Family, Mode};
use fvdlens::feature_io::{encode_features, save_clipset, Dtype};
use fvdlens::synthetic::tiled_clips;
use fvdlens::FeatureMatrix;
use serde_json::Value;

const BLESS_VAR: &str = "FVDLENS_BLESS";

fn blessing() -> bool {
    std::env::var_os(BLESS_VAR).is_some_and(|v| v == "1")
}

fn refs() -> String {
    fixtures().join("refs").display().to_string()
}

fn gens() -> String {
    fixtures().join("gens").display().to_string()
}

fn regenerate_clips() {
    let refs = tiled_clips(8, 16, 32, 32, 1, 11);
    let gens = distort_clipset(&refs, &DistortionSpec::new(Family::Elastic, 3, Mode::Spatiotemporal, 5)).unwrap();
    for dir in ["refs", "gens"] {
        let _ = fs::remove_dir_all(fixtures().join(dir));
    }
    save_clipset(&refs, fixtures().join("refs")).unwrap();
    save_clipset(&gens, fixtures().join("gens")).unwrap();
}

fn check_golden(name: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(dir.path(), args));
    let produced = dir.path().join("report.json");
    let golden = fixtures().join("golden").join(name);
    if blessing() {
        fs::create_dir_all(golden.parent().unwrap()).unwrap();
        fs::copy(&produced, &golden).unwrap();
        return;
    }
    json_close(&read_json(&produced), &read_json(&golden), 2e-5, name).unwrap();
}

/// Set FVDLENS_BLESS=1 to rewrite the fixture clips and golden reports.
#[test]
fn shipped_fixtures_match_golden_reports() {
    if blessing() {
        regenerate_clips();
    }
    check_golden(
        "compute.json",
        &["compute", "--ref", &refs(), "--gen", &gens(), "--extractor", "toy-v1-128"],
    );
    check_golden(
        "sensitivity.json",
        &["sensitivity", "--input", &refs(), "--family", "elastic", "--levels", "1..5", "--extractor", "toy-v1-128"],
    );
    let report = read_json(&fixtures().join("golden/sensitivity.json"));
    assert_eq!(report["levels"].as_array().unwrap().len(), 5);
    assert!(report["average"].is_object());
}

fn features_file(dir: &Path) -> String {
    let out = dir.join("extract");
    ok(&run_in(&out, &["extract", "--input", &refs()]));
    out.join("features.fvdf").display().to_string()
}

#[test]
fn compute_same_file_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = features_file(dir.path());
    let out = dir.path().join("cmp");
    ok(&run_in(&out, &["compute", "--ref", &f, "--gen", &f]));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["metric"], "FVD");
    assert_eq!(report["value"].as_f64().unwrap(), 0.0);
    assert_eq!(report["reference_rows"], 8);
}

#[test]
fn frame_features_report_fid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(dir.path(), &["compute", "--ref", &refs(), "--gen", &gens(), "--frames"]));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["metric"], "FID");
    assert_eq!(report["reference_rows"], 8 * 16);
}

#[test]
fn bad_magic_exits_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fvdf");
    fs::write(&bad, b"NOPE0000000000000000000000").unwrap();
    let bad = bad.display().to_string();
    let out = run_in(dir.path(), &["compute", "--ref", &bad, "--gen", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "BadMagic");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["freeze", "--input", "/nonexistent/clips"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "IoError");
}

#[test]
fn non_finite_payload_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], None, "t").unwrap();
    let mut bytes = encode_features(&m, Dtype::F64).unwrap();
    let n = bytes.len();
    bytes[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
    let path = dir.path().join("nan.fvdf");
    fs::write(&path, bytes).unwrap();
    let p = path.display().to_string();
    let out = run_in(dir.path(), &["compute", "--ref", &p, "--gen", &p]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "NonFiniteInput");
}

#[test]
fn freeze_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run_in(&a, &["freeze", "--input", &refs()]));
    let once = a.join("clips").display().to_string();
    ok(&run_in(&b, &["freeze", "--input", &once]));
    let ra = read_json(&a.join("report.json"));
    let rb = read_json(&b.join("report.json"));
    assert_eq!(ra["checksums"], rb["checksums"]);
    assert_eq!(
        fs::read(a.join("clips/manifest.json")).unwrap(),
        fs::read(b.join("clips/manifest.json")).unwrap()
    );
}

#[test]
fn probe_defaults_echo_config() {
    let dir = tempfile::tempdir().unwrap();
    // 8 refs vs 8 candidates: sample size must fit the candidate count
    let out = run_in(
        dir.path(),
        &["probe", "--ref", &refs(), "--candidates", &gens(), "--sample-size", "8", "--extractor", "toy-v1-8-g2"],
    );
    ok(&out);
    let report = read_json(&dir.path().join("report.json"));
    let cfg = &report["resample"]["config"];
    assert_eq!(cfg["steps"], 300);
    assert_eq!(cfg["lr0"], 0.01);
    assert_eq!(cfg["candidate_multiple"], 8);
    assert_eq!(report["expected_candidates"], 64);
    let run = read_json(&dir.path().join("run.json"));
    assert_eq!(run["steps"], 300);
    assert_eq!(run["lr0"], 0.01);
    assert_eq!(run["candidate-multiple"], 8);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let body = serde_json::json!({
        "command": "distort",
        "input": refs(),
        "family": "motion_blur",
        "severity": 2,
        "mode": "spatial",
        "seed": 3,
    });
    fs::write(&cfg, body.to_string()).unwrap();
    let out = dir.path().join("o");
    ok(&run_in(&out, &["--config", cfg.to_str().unwrap(), "--seed", "9"]));
    let run = read_json(&out.join("run.json"));
    assert_eq!(run["seed"], 9);
    assert_eq!(run["severity"], 2);
    assert_eq!(run["family"], "motion_blur");
    assert_eq!(run["format"], "json");
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["spec"]["seed"], 9);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "freeze", "input": "x", "colour": "red"}"#).unwrap();
    let out = run_in(dir.path(), &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn config_for_other_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "freeze", "input": "x"}"#).unwrap();
    let out = run_in(dir.path(), &["--config", cfg.to_str().unwrap(), "extract", "--input", &refs()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "InvalidConfig");
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["distort", "--input", &refs(), "--family", "elastic", "--severity", "4", "--mode", "spatiotemporal"];
    ok(&bin().args(args).args(["--output", a.to_str().unwrap()]).env("FVDLENS_THREADS", "1").output().unwrap());
    ok(&run_in(&b, &args));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(read_json(&a.join("run.json"))["threads"], 1);
    assert_eq!(read_json(&b.join("run.json"))["threads"], Value::Null);
}

#[test]
fn table_and_csv_formats() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    let stdout = ok(&run_in(&t, &["compute", "--ref", &refs(), "--gen", &gens(), "--format", "table"]));
    assert!(stdout.contains("FVD"));
    assert_eq!(fs::read_to_string(t.join("report.txt")).unwrap(), stdout);
    let c = dir.path().join("c");
    ok(&run_in(&c, &["compute", "--ref", &refs(), "--gen", &gens(), "--format", "csv"]));
    let csv = fs::read_to_string(c.join("report.csv")).unwrap();
    assert!(csv.starts_with("term,value"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn chunks_on_short_clips_reports_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["chunks", "--ref", &refs(), "--gen", &gens(), "--offsets", "0,8"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "ChunkOutOfRange");
    ok(&run_in(dir.path(), &["chunks", "--ref", &refs(), "--gen", &gens(), "--chunk-length", "8", "--stride", "8"]));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["chunks"].as_array().unwrap().len(), 2);
}

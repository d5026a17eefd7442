mod common;

use std::path::Path;

use common::*;
use serde_json::Value;

fn validate(kind: &str, report: &Value) -> Result<(), String> {
    let schema = read_json(&schemas().join(format!("{kind}.schema.json")));
    let validator = jsonschema::validator_for(&schema).map_err(|e| format!("bad schema {kind}: {e}"))?;
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(format!("{kind}: {}", errors.join("; ")))
    }
}

fn produce(out: &Path, args: &[&str]) -> Value {
    ok(&run_in(out, args));
    read_json(&out.join("report.json"))
}

#[test]
fn every_command_emits_schema_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let refs = fixtures().join("refs").display().to_string();
    let gens = fixtures().join("gens").display().to_string();
    let d = |name: &str| dir.path().join(name);
    let cases: Vec<(&str, Value)> = vec![
        ("compute", produce(&d("compute"), &["compute", "--ref", &refs, "--gen", &gens])),
        (
            "distort",
            produce(&d("distort"), &["distort", "--input", &refs, "--family", "blur", "--severity", "1"]),
        ),
        ("freeze", produce(&d("freeze"), &["freeze", "--input", &refs])),
        ("extract", produce(&d("extract"), &["extract", "--input", &refs, "--f32"])),
        (
            "sensitivity",
            produce(
                &d("sensitivity"),
                &["sensitivity", "--input", &refs, "--family", "blur", "--levels", "1,5", "--extractor", "toy-v1-16-g4"],
            ),
        ),
        (
            "null_space",
            produce(
                &d("probe"),
                &["probe", "--ref", &refs, "--candidates", &gens, "--sample-size", "4", "--candidate-multiple", "2", "--steps", "5"],
            ),
        ),
        (
            "long_video",
            produce(
                &d("chunks"),
                &["chunks", "--ref", &refs, "--gen", &gens, "--chunk-length", "4", "--offsets", "0,6,12", "--full-length"],
            ),
        ),
    ];
    for (kind, report) in &cases {
        assert_eq!(report["kind"], *kind);
        validate(kind, report).unwrap();
    }
}

#[test]
fn golden_reports_are_schema_valid() {
    validate("compute", &read_json(&fixtures().join("golden/compute.json"))).unwrap();
    validate("sensitivity", &read_json(&fixtures().join("golden/sensitivity.json"))).unwrap();
}

#[test]
fn schemas_reject_malformed_reports() {
    let mut report = read_json(&fixtures().join("golden/compute.json"));
    report["unexpected"] = Value::Bool(true);
    assert!(validate("compute", &report).is_err());

    let mut report = read_json(&fixtures().join("golden/sensitivity.json"));
    report.as_object_mut().unwrap().remove("average");
    assert!(validate("sensitivity", &report).is_err());

    let mut report = read_json(&fixtures().join("golden/compute.json"));
    report["value"] = Value::from(-1.0);
    assert!(validate("compute", &report).is_err());
}

//! End-to-end tests of the binary: exit codes, schema validation, output
//! formats and the sweep table contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lefgpd"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

#[test]
fn verify_cat_map_exits_zero_with_all_values() {
    let output = bin()
        .args(["verify", "--config", &data("catmap.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict"], "pass");
    for key in [
        "geometric_extrapolated",
        "spectral",
        "fixed_point_side",
        "cohomological",
    ] {
        let v = report["limits"][key].as_f64().unwrap();
        assert!((v - -1.0).abs() < 1e-4, "{key} = {v}");
    }
    assert_eq!(report["ladder"].as_array().unwrap().len(), 4);
    assert_eq!(report["fixed_points"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_writes_report_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = bin()
        .args(["verify", "--config", &data("catmap.json")])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn identity_map_is_a_math_error_with_non_simple_message() {
    let output = bin()
        .args(["verify", "--config", &data("identity.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = stderr(&output);
    assert!(err.contains("non-simple"), "stderr: {err}");
}

#[test]
fn too_few_rungs_is_a_schema_violation() {
    let output = bin()
        .args(["verify", "--config", &data("bad_rungs.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = stderr(&output);
    assert!(err.contains("ladder.rungs"), "stderr: {err}");
}

#[test]
fn unknown_config_keys_are_rejected_with_location() {
    let output = bin()
        .args(["verify", "--config", &data("unknown_key.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = stderr(&output);
    assert!(err.contains("unknown field"), "stderr: {err}");
    assert!(err.contains("flux_capacitor"), "stderr: {err}");
    assert!(err.contains("line"), "stderr: {err}");
}

#[test]
fn failed_verdict_exits_two_and_still_emits_report() {
    let output = bin()
        .args(["verify", "--config", &data("impossible_tolerance.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{}", stderr(&output));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict"], "fail");
    // the rest of the report is intact for diagnosis
    assert!(report["ladder"].as_array().unwrap().len() == 4);
    let comparisons = report["comparisons"].as_array().unwrap();
    assert!(comparisons.iter().any(|c| c["pass"] == false));
}

#[test]
fn sweep_header_is_byte_exact_and_rows_descend() {
    let output = bin()
        .args(["sweep", "--config", &data("catmap.json")])
        .args(["--t-max", "0.2", "--ratio", "0.5", "--rungs", "6"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,tau,str_t_geometric,str_spectral,fixed_point_side,abs_error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    let mut prev_t = f64::INFINITY;
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        let t: f64 = fields[0].parse().unwrap();
        assert!(t < prev_t, "t not descending");
        prev_t = t;
        let abs_error: f64 = fields[5].parse().unwrap();
        assert!(abs_error < 1e-4, "abs_error {abs_error}");
    }
}

#[test]
fn sweep_of_no_fixed_point_map_has_zero_fixed_point_column() {
    let output = bin()
        .args(["sweep", "--config", &data("nofix.json")])
        .args(["--t-max", "0.2", "--ratio", "0.5", "--rungs", "4"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    for row in text.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[4], "0.0000000000000000e0", "row: {row}");
        // nonaffine maps have no spectral value: empty field
        assert_eq!(fields[3], "", "row: {row}");
    }
}

#[test]
fn circle_map_verifies_to_two() {
    let output = bin()
        .args(["verify", "--config", &data("circle.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let report: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert!(report["limits"]["spectral"].is_null());
    let fps = report["limits"]["fixed_point_side"].as_f64().unwrap();
    assert!((fps - 2.0).abs() < 1e-8);
    assert_eq!(report["fixed_points"].as_array().unwrap().len(), 2);
}

#[test]
fn model_kernel_gaussian_total_is_one() {
    let output = bin()
        .args([
            "model-kernel",
            "--order",
            "2",
            "--dim",
            "1",
            "--coeff",
            "1.0",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let total = doc["total_integral"][0][0].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-10, "total {total}");
    let deviation = doc["max_identity_deviation"].as_f64().unwrap();
    assert!(deviation < 1e-10);
}

#[test]
fn model_kernel_quartic_total_is_one() {
    let output = bin()
        .args([
            "model-kernel",
            "--order",
            "4",
            "--dim",
            "1",
            "--coeff",
            "1.0",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let total = doc["total_integral"][0][0].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-8, "total {total}");
}

#[test]
fn model_kernel_matrix_coefficient() {
    let output = bin()
        .args(["model-kernel", "--order", "2", "--dim", "1"])
        .args(["--coeff", "[[1.0, 0.0], [0.0, 2.0]]"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(doc["rank"], 2);
    let deviation = doc["max_identity_deviation"].as_f64().unwrap();
    assert!(deviation < 1e-8, "deviation {deviation}");
}

#[test]
fn model_kernel_rejects_non_elliptic_symbol() {
    let output = bin()
        .args(["model-kernel", "--order", "4", "--dim", "2"])
        .args(["--coeff", r#"{"terms":[{"alpha":[2,2],"matrix":[[1.0]]}]}"#])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = stderr(&output);
    assert!(err.contains("not elliptic"), "stderr: {err}");
    assert!(err.contains("direction"), "stderr: {err}");
}

#[test]
fn determinism_flag_cannot_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nondeterministic.json");
    std::fs::write(
        &path,
        r#"{
  "geometry": {"dimension": 1, "grid_size": 64},
  "map": {"type": "affine", "matrix": [[2]], "shift": [0.0]},
  "ladder": {"t_max": 0.2, "ratio": 0.5, "rungs": 4},
  "deterministic": false
}"#,
    )
    .unwrap();
    let output = bin()
        .args(["verify", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("deterministic"));
}

#[test]
fn verify_can_emit_the_ladder_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("csv_out.json");
    std::fs::write(
        &path,
        r#"{
  "geometry": {"dimension": 1, "grid_size": 64},
  "map": {"type": "affine", "matrix": [[2]], "shift": [0.0]},
  "ladder": {"t_max": 0.2, "ratio": 0.5, "rungs": 4},
  "output": {"format": "csv"}
}"#,
    )
    .unwrap();
    let output = bin()
        .args(["verify", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.starts_with("t,tau,str_t_geometric,str_spectral,fixed_point_side,abs_error\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn verify_and_model_kernel_outputs_are_reproducible() {
    let run_verify = || {
        bin()
            .args(["verify", "--config", &data("catmap.json")])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run_verify(), run_verify());

    let run_kernel = || {
        bin()
            .args(["model-kernel", "--order", "4", "--dim", "1", "--coeff", "1.0"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run_kernel(), run_kernel());
}

#[test]
fn runaway_ladder_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runaway.json");
    std::fs::write(
        &path,
        r#"{
  "geometry": {"dimension": 2, "grid_size": 64},
  "map": {"type": "affine", "matrix": [[2, 1], [1, 1]], "shift": [0.0, 0.0]},
  "ladder": {"t_max": 0.2, "ratio": 0.5, "rungs": 14}
}"#,
    )
    .unwrap();
    let output = bin()
        .args(["verify", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("grid"), "{}", stderr(&output));
}

#[test]
fn invalid_thread_cap_is_a_config_error() {
    let output = bin()
        .args(["verify", "--config", &data("catmap.json")])
        .env("LEFGPD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("LEFGPD_THREADS"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let output = bin()
        .args(["verify", "--config", "/nonexistent/nope.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_not_two() {
    let output = bin().args(["verify"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

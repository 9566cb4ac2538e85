use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbm-hitfun"))
        .args(args)
        .env_remove("GBM_HITFUN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header row and data rows of a CSV report, comment lines dropped.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn json_report(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("JSON error record");
    serde_json::from_str(line).unwrap()
}

fn schema_validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn value(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

#[test]
fn density_row_matches_closed_form() {
    let out = run(&["density", "--mu", "0.5", "--x", "2", "--t", "1"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["t", "q"]);
    assert_eq!(rows.len(), 1);
    let q: f64 = rows[0][1].parse().unwrap();
    assert!((q - 0.2196956447338612).abs() < 1e-12, "{q}");
}

#[test]
fn csv_has_seventeen_significant_digits_and_defaults() {
    let text = stdout(&run(&["density", "--mu", "1", "--x", "2", "--t-grid", "0.1:10:3:log"]));
    for key in ["# mu = 1", "# x = 2", "# tol = 1e-10", "# abs_tol = 1e-9", "# t = 0.1:10:3:log"] {
        assert!(text.lines().any(|l| l == key), "missing '{key}' in\n{text}");
    }
    let (_, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    for row in rows {
        for cell in row {
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
        }
    }
}

#[test]
fn zeros_of_order_five_halves() {
    let out = run(&["zeros", "--mu", "2.5"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["index", "re", "im"]);
    assert_eq!(rows.len(), 2);
    let im = 0.75f64.sqrt();
    let z: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    for (re, i) in &z {
        assert!((re + 1.5).abs() < 1e-12);
        assert!((i.abs() - im).abs() < 1e-12);
    }
    assert!((z[0].1 + z[1].1).abs() < 1e-14);
}

#[test]
fn laplace_check_within_tolerance() {
    let out = run(&["laplace-check", "--mu", "1", "--x", "2", "--r", "1"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["r", "analytic", "numeric", "diff"]);
    let a: f64 = rows[0][1].parse().unwrap();
    let n: f64 = rows[0][2].parse().unwrap();
    assert!((a - n).abs() <= 1e-6);
}

#[test]
fn wlambda_columns_add_up() {
    let out = run(&["wlambda", "--mu", "2.5", "--x", "2", "--v-grid", "0:4:5"]);
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header, ["v", "w", "w1", "w2"]);
    for r in rows {
        let c: Vec<f64> = r.iter().map(|s| s.parse().unwrap()).collect();
        assert!((c[1] - c[2] - c[3]).abs() <= 1e-15 * c[1].abs().max(1.0));
    }
}

#[test]
fn kernel_reports_both_routes() {
    let v = json_report(&["kernel", "--n", "3", "--mu", "1.5", "--x", "2", "--rho-grid", "0.5:2:2", "--output", "json"]);
    assert!(schema_validator().is_valid(&v));
    for row in v["rows"].as_array().unwrap() {
        assert!(value(&row["rel_diff"]).abs() < 1e-8);
    }
    let v = json_report(&["kernel", "--n", "2", "--mu", "1", "--x", "2", "--rho", "1", "--output", "json"]);
    assert!(v["rows"][0]["p_closed"].is_null());
    assert!(schema_validator().is_valid(&v));
}

#[test]
fn tail_reports_constant() {
    let v = json_report(&["tail", "--mu", "1", "--x", "2", "--output", "json"]);
    assert!(schema_validator().is_valid(&v));
    // (x^2 - 1) / 4 for mu = 1
    assert!((value(&v["summary"]["constant"]) - 0.75).abs() < 0.75 * 5e-3);
    assert_eq!(v["summary"]["regime"], "power_law");
}

#[test]
fn json_reports_validate_against_schema() {
    let validator = schema_validator();
    for args in [
        &["density", "--mu", "0.5", "--x", "2", "--t-grid", "0.5:2:4", "--output", "json"][..],
        &["zeros", "--mu", "3.7", "--output", "json"],
        &["wlambda", "--mu", "0.3", "--x", "3", "--v", "1", "--output", "json"],
        &["laplace-check", "--mu", "0", "--x", "2", "--r", "1", "--output", "json"],
        &["mc-validate", "--paths", "500"],
    ] {
        let v = json_report(args);
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let broken: Value = serde_json::json!({"program": "gbm-hitfun", "command": "density"});
    assert!(!validator.is_valid(&broken));
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let out = run(&["density", "--mu", "0.5", "--x", "2", "--t", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("\nt,q\n"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["density", "--mu", "1", "--x", "2", "--bogus"][..],
        &["integrate", "--mu", "1"],
        &["density", "--mu", "1"],
        &["density", "--mu", "1", "--x", "2", "--t-grid", "3:1:5"],
        &["mc-validate", "--bridge", "maybe"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_record(&out)["error"]["code"], "usage", "{args:?}");
    }
}

#[test]
fn domain_errors_exit_one() {
    for args in [
        &["density", "--mu", "-1", "--x", "2"][..],
        &["density", "--mu", "1", "--x", "0.5"],
        &["density", "--mu", "1", "--x", "2", "--t", "-3"],
        &["kernel", "--n", "1", "--mu", "1", "--x", "2"],
        &["mc-validate", "--paths", "0"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_record(&out)["error"]["code"], "domain", "{args:?}");
    }
}

#[test]
fn nonconvergence_exits_two() {
    // corrections t^{-k mu} decay too slowly at mu = 0.05 for the extrapolation to settle
    let out = run(&["tail", "--mu", "0.05", "--x", "2"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_record(&out)["error"]["code"], "nonconvergence");
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("--rho-grid"));
}

#[test]
fn mc_report_is_identical_across_worker_counts() {
    let base = ["mc-validate", "--paths", "3000", "--seed", "7"];
    let one = run(&[&base[..], &["--workers", "1"]].concat());
    let four = run(&[&base[..], &["--workers", "4"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_gbm-hitfun"))
        .args(base)
        .args(["--workers", "1"])
        .env("GBM_HITFUN_THREADS", "3")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, env.stdout);
    let other_seed = run(&["mc-validate", "--paths", "3000", "--seed", "8"]);
    assert_ne!(one.stdout, other_seed.stdout);
}

#[test]
fn bad_thread_variable_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_gbm-hitfun"))
        .args(["zeros", "--mu", "1"])
        .env("GBM_HITFUN_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

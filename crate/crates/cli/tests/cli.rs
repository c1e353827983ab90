use std::path::Path;
use std::process::{Command, Output};

use hardy_core::fourier::kappa;
use hardy_core::green::free_green_quadrature;
use serde_json::Value;

fn hardy(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy")).args(args).arg("--output-dir").arg(dir).output().expect("hardy runs")
}

fn ok(args: &[&str], dir: &Path) {
    let out = hardy(args, dir);
    assert!(out.status.success(), "{args:?}: {}\n{}", out.status, String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

fn rows(dir: &Path, name: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(read(dir, name).as_slice()).records().map(Result::unwrap).collect()
}

#[test]
fn green_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["green", "--dim", "3", "--radius", "8", "--field", "iid", "--delta", "0.2", "--seed", "7"];
    ok(&args, a.path());
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    ok(&threaded, b.path());
    for name in ["green.csv", "green.json", "aronson.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let m = json(a.path(), "manifest.json");
    assert_eq!(m["schema"], "hardy-run-manifest/1");
    assert_eq!(m["seeds"], serde_json::json!([7]));
    assert_eq!(m["config"]["seed"], 7);
}

#[test]
fn free_green_csv_passes_invariants() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["green", "--dim", "3", "--radius", "6", "--field", "free"], dir.path());
    let side = json(dir.path(), "green.json");
    assert!(side["green"]["residual"].as_f64().unwrap() <= 1e-10);
    let origin =
        rows(dir.path(), "green.csv").into_iter().find(|r| r[0] == *"0" && r[1] == *"0" && r[2] == *"0").unwrap();
    let g0: f64 = origin[3].parse().unwrap();
    assert!(g0 > 0.0 && g0 < free_green_quadrature(&[0, 0, 0], 1e-12).unwrap().value);
}

#[test]
fn oracle_matches_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["green", "--oracle", "bessel", "--x", "10", "0", "0"], dir.path());
    let value = json(dir.path(), "oracle.json")["quadrature"]["value"].as_f64().unwrap();
    let direct = free_green_quadrature(&[10, 0, 0], 1e-10).unwrap().value;
    assert_eq!(value, direct);
    let leading = kappa(3).unwrap() / 2.0 / 10.0;
    assert!((value / leading - 1.0).abs() < 0.01, "{value} vs {leading}");
}

#[test]
fn negative_coordinates_parse_before_other_flags() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["green", "--oracle", "bessel", "--x", "-3", "1", "-2", "--tol", "1e-9"], dir.path());
    assert_eq!(json(dir.path(), "oracle.json")["x"], serde_json::json!([-3, 1, -2]));
}

#[test]
fn certificate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["hardy", "--radius", "8", "--raw-green", "--certify", "--weight-scale", "1.0"], dir.path());
    let cert = json(dir.path(), "certificate.json");
    assert_eq!(cert["certificate"]["certified"], true);

    let out = hardy(&["hardy", "--radius", "16", "--raw-green", "--certify", "--weight-scale", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed: Hardy certificate at radius 16"));
    let cert = json(dir.path(), "certificate.json");
    assert_eq!(cert["certificate"]["certified"], false);
    assert_eq!(cert["radius"], 16);
    let m = json(dir.path(), "manifest.json");
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn annulus_report_has_inverse_square_slope() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["hardy", "--dim", "3", "--radius", "32", "--field", "free", "--report", "annuli"], dir.path());
    let fit = rows(dir.path(), "regions.csv").into_iter().find(|r| r[2] == *"fit:shell_mean").unwrap();
    let slope: f64 = fit[6].parse().unwrap();
    assert!((slope + 2.0).abs() <= 0.1, "{slope}");
}

#[test]
fn rellich_rhs_weight_scales_like_inverse_fourth_power() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["rellich", "--dim", "3", "--alpha", "2", "--field", "free"], dir.path());
    let slope = json(dir.path(), "rellich.json")["rhs_weight_fit"]["slope"].as_f64().unwrap();
    assert!((slope + 4.0).abs() <= 0.3, "{slope}");
}

#[test]
fn fourier_zero_kernel_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["fourier", "--kernel", "zero", "--dim", "3", "--probe-t", "--cs-grid", "32"], dir.path());
    let table = rows(dir.path(), "t_kernel.csv");
    assert_eq!(table.len(), 7);
    for r in &table {
        let x: Vec<i64> = (0..3).map(|j| r[j].parse().unwrap()).collect();
        let t: f64 = r[3].parse().unwrap();
        let l1: i64 = x.iter().map(|v| v.abs()).sum();
        let expected = if l1 == 0 { 0.5 } else { 1.0 / 12.0 };
        assert!(l1 <= 1 && (t - expected).abs() < 1e-15, "{x:?} {t}");
    }
    let body = json(dir.path(), "fourier.json");
    assert!((body["t"]["total"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert!(body["cs_grid"]["report"]["min"].as_f64().unwrap() > 0.0);
}

#[test]
fn ensemble_smoke_run_is_low_confidence_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "ensemble",
        "--dim",
        "3",
        "--radius",
        "12",
        "--delta",
        "0.2",
        "--realizations",
        "2",
        "--seed",
        "3",
        "--probe-shells",
        "3,4,5",
        "--moments",
        "1,2,3",
        "--bootstrap",
        "20",
    ];
    ok(&args, a.path());
    ok(&args, b.path());
    assert_eq!(read(a.path(), "ensemble.csv"), read(b.path(), "ensemble.csv"));
    assert_eq!(json(a.path(), "ensemble.json")["low_confidence"], true);
    let fits: Vec<String> =
        rows(a.path(), "ensemble.csv").into_iter().filter(|r| r[0] == *"fit:w^p").map(|r| r[2].to_string()).collect();
    assert_eq!(fits, ["1.0", "2.0", "3.0"]);
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, "{\n  \"dim\": 3,\n  \"radios\": 9\n}\n").unwrap();
    let out = hardy(&["green", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("radios") && err.contains("line 3"), "{err}");
}

#[test]
fn manifest_config_reproduces_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&["hardy", "--radius", "8", "--field", "iid", "--seed", "5", "--report", "sectors", "--ell", "2"], a.path());
    let manifest = json(a.path(), "manifest.json");
    let mut config = manifest["config"].clone();
    config.as_object_mut().unwrap().remove("output_dir");
    let path = b.path().join("config.json");
    std::fs::write(&path, serde_json::to_vec(&config).unwrap()).unwrap();
    ok(&["hardy", "--config", path.to_str().unwrap()], b.path());
    for name in ["weight.csv", "regions.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

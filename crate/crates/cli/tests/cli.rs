use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bcg::report::CSV_COLUMNS;
use bcg::scenario::{parse_scenario, BodyDesc, Scenario};
use serde_json::Value;

fn bcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcg")).args(args).output().expect("running bcg")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bcg-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// CSV rows with the wall-time column dropped.
fn rows_without_time(csv: &str) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(headers, CSV_COLUMNS);
    let t = headers.iter().position(|h| h == "wall_time_s").unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().enumerate().filter(|(i, _)| *i != t).map(|(_, s)| s.to_string()).collect())
        .collect()
}

fn value(rows: &[Vec<String>], quantity: &str) -> f64 {
    let q = CSV_COLUMNS.iter().position(|c| *c == "quantity").unwrap();
    let m = CSV_COLUMNS.iter().position(|c| *c == "mean").unwrap();
    rows.iter().find(|r| r[q] == quantity).unwrap_or_else(|| panic!("no row {quantity}"))[m].parse().unwrap()
}

#[test]
fn selftest_writes_csv_and_manifest() {
    let out = scratch("selftest.csv");
    let o = bcg(&["selftest", "--field", "H", "--seed", "42", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("PASS"));
    let rows = rows_without_time(&std::fs::read_to_string(&out).unwrap());
    assert!(!rows.is_empty());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["command"], "selftest");
    assert_eq!(manifest["scenario"]["seed"], 42);
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let o = bcg(&["santalo", "--samples", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rows_without_time(&String::from_utf8(o.stdout).unwrap());
    assert!(value(&rows, "inequality_sigmas") > 3.0);
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = configs().join("ex_cubes_c2.json");
    let run = || {
        let o = bcg(&["brs", "--config", cfg.to_str().unwrap(), "--samples", "20000", "--workers", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        rows_without_time(&String::from_utf8(o.stdout).unwrap())
    };
    let a = run();
    assert_eq!(a, run());
    assert!(value(&a, "gap_sigmas") > 3.0);
}

#[test]
fn malformed_config_is_an_error_with_position() {
    let path = scratch("broken.json");
    std::fs::write(&path, "{\n  \"schema_version\": 1,\n  \"id\": \"x\",\n  \"field\": \"C\" \"n\": 2\n}\n").unwrap();
    let o = bcg(&["brs", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 4, column"), "{err}");
}

#[test]
fn schema_errors_are_reported() {
    let base = std::fs::read_to_string(configs().join("ex_cubes_c2.json")).unwrap();
    let unknown = base.replace("\"seed\"", "\"colour\": 1, \"seed\"");
    let err = parse_scenario(&unknown, "t.json").unwrap_err().to_string();
    assert!(err.contains("t.json: line") && err.contains("colour"), "{err}");
    let version = base.replace("\"schema_version\": 1", "\"schema_version\": 9");
    assert!(format!("{:#}", parse_scenario(&version, "t.json").unwrap_err()).contains("schema_version"));

    let path = scratch("wrong-experiment.json");
    std::fs::write(&path, &base).unwrap();
    let o = bcg(&["santalo", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn example_configs_parse_and_build() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let sc = parse_scenario(&text, &path.display().to_string()).unwrap();
        assert!(sc.experiment.is_some(), "{}", path.display());
        sc.build_bodies().unwrap();
        sc.build_transform().unwrap();
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn every_body_kind_round_trips() {
    let text = r#"{
      "schema_version": 1, "id": "kinds", "field": "C", "n": 2,
      "bodies": [
        { "kind": "ball", "center": [0.1, 0, 0, 0], "radius": 1.5 },
        { "kind": "ellipsoid", "h": [[2, [0.5, 0.5]], [[0.5, -0.5], 3]] },
        { "kind": "box", "lo": [-1, -1, -1, -1], "hi": [1, 2, 1, 1] },
        { "kind": "vpolytope", "field": "R", "n": 2, "vertices": [[1, 0], [0, 1], [-1, -1]] },
        { "kind": "affine_image", "body": { "kind": "ball", "radius": 1 }, "a": [[2, 0], [0, 1]], "b": [0, 0, 1, 0] },
        { "kind": "norm_ball", "q": "inf", "radius": 1 },
        { "kind": "norm_ball", "field": "H", "n": 1, "q": 1.5, "radius": 2 }
      ],
      "samples": 1000, "inner_samples": 1, "seed": 1, "workers": 1
    }"#;
    let sc = parse_scenario(text, "kinds").unwrap();
    let again: Scenario = serde_json::from_str(&serde_json::to_string(&sc).unwrap()).unwrap();
    assert_eq!(sc, again);
    let bodies = sc.build_bodies().unwrap();
    assert_eq!(bodies.len(), 7);
    let pi = std::f64::consts::PI;
    let vols: Vec<Option<f64>> = bodies.iter().map(|b| b.exact_volume()).collect();
    assert!((vols[0].unwrap() - pi * pi / 2.0 * 1.5f64.powi(4)).abs() < 1e-9);
    // det of the realified form is (2 * 3 - 0.5)^2.
    assert!((vols[1].unwrap() - pi * pi / 2.0 / 5.5).abs() < 1e-9);
    assert!((vols[2].unwrap() - 24.0).abs() < 1e-12);
    assert!((vols[3].unwrap() - 1.5).abs() < 1e-12);
    assert!((vols[4].unwrap() - 4.0 * pi * pi / 2.0).abs() < 1e-9);
    assert!((vols[5].unwrap() - pi * pi).abs() < 1e-9);
    assert_eq!(bodies[6].dim(), 4);
    assert!(matches!(sc.bodies[5], BodyDesc::NormBall { .. }));

    let bad = text.replace("\"radius\": 1.5", "\"radius\": 1.5, \"spin\": 2");
    assert!(parse_scenario(&bad, "kinds").is_err());
    let bad_q = text.replace("\"q\": \"inf\"", "\"q\": \"infinity\"");
    assert!(parse_scenario(&bad_q, "kinds").unwrap().build_bodies().is_err());
}

#[test]
fn counterexample_with_unit_aspect_is_not_significant() {
    let o = bcg(&["counterexample", "--aspect", "1", "--samples", "200000", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rows_without_time(&String::from_utf8_lossy(&o.stdout));
    assert!(value(&rows, "delta_sigmas_steiner").abs() <= 3.0);
    assert!(value(&rows, "delta_sigmas_control").abs() <= 3.0);
    assert!(stderr(&o).contains("PASS ball is a fixed point"), "{}", stderr(&o));
}

#[test]
fn failed_check_exits_with_two() {
    // Too close to the ball for the raise to be visible at this budget.
    let out = scratch("weak.csv");
    let o = bcg(&["counterexample", "--aspect", "1.01", "--samples", "20000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "fail");
}

#[test]
fn bad_arguments_are_errors() {
    assert_eq!(bcg(&["brs", "--field", "Q"]).status.code(), Some(1));
    assert_eq!(bcg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bcg(&["--help"]).status.code(), Some(0));
    let o = bcg(&["brs", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

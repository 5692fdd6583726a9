use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GAUSS: &str = r#"{"family":"gaussian","dim":2,"scale":1}"#;
const GAUSS_SHIFTED: &str = r#"{"family":"gaussian","dim":2,"scale":2,"center":[1,0]}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radial-ot"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn distance_of_scaled_gaussians() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["distance", "--spec", GAUSS, "--spec2", GAUSS_SHIFTED]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("distance.json"));
    let w2 = report["w2"].as_f64().unwrap();
    assert!((w2 - 3f64.sqrt()).abs() < 1e-8 * 3f64.sqrt());
    assert_eq!(report["translation_part"].as_f64().unwrap(), 1.0);
}

#[test]
fn spec_files_and_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), GAUSS).unwrap();
    fs::write(dir.path().join("b.json"), GAUSS_SHIFTED).unwrap();
    let out = run(
        dir.path(),
        &["distance", "--spec", "a.json", "--spec2", "b.json", "--out", "results/nested"],
    );
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("results/nested/distance.json").exists());
    let leftovers: Vec<_> = fs::read_dir(dir.path().join("results/nested"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn map_eval_doubles_radii_and_moves_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["map-eval", "--spec", GAUSS, "--spec2", GAUSS_SHIFTED, "--radii", "0.5,1,2", "--point", "-1,0.5"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for row in csv_rows(&dir.path().join("radial_map.csv")) {
        assert!((row[1] - 2.0 * row[0]).abs() < 1e-8 * row[0]);
    }
    let points = csv_rows(&dir.path().join("points.csv"));
    // T(x) = m1 + 2 (x - m0)
    assert!((points[0][2] + 1.0).abs() < 1e-8 && (points[0][3] - 1.0).abs() < 1e-8);
}

#[test]
fn interpolation_passes_its_geodesic_check() {
    let dir = tempfile::tempdir().unwrap();
    let exp = r#"{"family":"exponential","dim":3,"scale":0.8}"#;
    let bump = r#"{"family":"bump","dim":3,"scale":2,"center":[0,1,0]}"#;
    let out = run(dir.path(), &["interpolate", "--spec", exp, "--spec2", bump, "--t", "0,0.5,1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let geodesic = fs::read_to_string(dir.path().join("geodesic.csv")).unwrap();
    assert_eq!(geodesic.lines().count(), 4);
    assert!(geodesic.lines().skip(1).all(|l| l.ends_with("true")));
}

#[test]
fn barycenter_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["barycenter", "--specs", GAUSS, GAUSS_SHIFTED, "--weights", "0.25,0.75"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("barycenter.json")).unwrap();
    let result = radial_ot::BarycenterResult::from_json(&text).unwrap();
    assert_eq!(result.center, vec![0.75, 0.0]);
    assert_eq!(format!("{}\n", result.to_json().unwrap()), text);
    // scales 1 and 2 average to 1.75 at every stored node
    let unit = radial_ot::RadialProfile::new(radial_ot::Generator::Gaussian, 2)
        .unwrap()
        .radial_measure(1.0)
        .unwrap();
    let grid = result.measure.u_grid();
    for &u in &grid[1..grid.len() - 1] {
        let q = unit.quantile(u);
        assert!((result.measure.quantile(u) - 1.75 * q).abs() <= 1e-8 * q, "u = {u}");
    }
}

#[test]
fn seeded_samples_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    for out_dir in [&first, &second] {
        let out = run(
            dir.path(),
            &["sample", "--spec", GAUSS_SHIFTED, "--n", "50", "--seed", "3", "--out", out_dir.to_str().unwrap()],
        );
        assert_eq!(code(&out), 0);
    }
    let a = fs::read_to_string(first.join("samples.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(second.join("samples.csv")).unwrap());
    assert_eq!(a.lines().next().unwrap(), "x1,x2,w");
    assert_eq!(a.lines().count(), 51);
}

#[test]
fn oracle_reports_its_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["oracle-w2", "--spec", GAUSS, "--spec2", GAUSS_SHIFTED, "--n", "200"]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("oracle_w2.json"));
    assert_eq!(report["replicates"].as_array().unwrap().len(), 10);
    let [lo, hi] = [0, 1].map(|k| report["interval"][k].as_f64().unwrap());
    assert!(lo < hi);
    assert_eq!(report["brackets"].as_bool().unwrap(), lo <= 3f64.sqrt() && 3f64.sqrt() <= hi);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(r#"{{"spec": {GAUSS}, "spec2": {GAUSS_SHIFTED}, "out": "from_config"}}"#);
    fs::write(dir.path().join("run.json"), config).unwrap();
    assert_eq!(code(&run(dir.path(), &["distance", "--config", "run.json"])), 0);
    assert!(dir.path().join("from_config/distance.json").exists());
    let out = run(dir.path(), &["distance", "--config", "run.json", "--spec2", GAUSS, "--out", "flag"]);
    assert_eq!(code(&out), 0);
    // identical laws: the squared parts are rounding noise
    let report = json(&dir.path().join("flag/distance.json"));
    assert_eq!(report["translation_part"].as_f64().unwrap(), 0.0);
    assert!(report["radial_part"].as_f64().unwrap() < 1e-12);
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = r#"{"family":"nope","dim":2}"#;
    assert_eq!(code(&run(dir.path(), &["distance", "--spec", unknown, "--spec2", GAUSS])), 2);
    assert_eq!(code(&run(dir.path(), &["distance", "--spec", GAUSS])), 2);
    assert_eq!(code(&run(dir.path(), &["distance", "--spec", "missing.json", "--spec2", GAUSS])), 2);
    let out = run(dir.path(), &["map-eval", "--spec", GAUSS, "--spec2", GAUSS, "--radii", "-1"]);
    assert_eq!(code(&out), 2);
    fs::write(dir.path().join("typo.json"), r#"{"spec_2": {}}"#).unwrap();
    assert_eq!(code(&run(dir.path(), &["distance", "--config", "typo.json"])), 2);
    fs::write(dir.path().join("solver.json"), r#"{"sinkhorn": {"bogus": 1}}"#).unwrap();
    assert_eq!(code(&run(dir.path(), &["counterexample", "--case", "1", "--config", "solver.json"])), 2);
}

#[test]
fn failed_preconditions_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let heavy = r#"{"family":"student","params":{"p":1.5},"dim":2}"#;
    let out = run(dir.path(), &["distance", "--spec", heavy, "--spec2", GAUSS]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("second moment"));
    let flat = r#"{"family":"student","params":{"p":1},"dim":2}"#;
    assert_eq!(code(&run(dir.path(), &["sample", "--spec", flat])), 3);
    assert_eq!(
        code(&run(dir.path(), &["counterexample", "--case", "1", "--grid", "32", "--epsilon", "1e-9"])),
        3
    );
}

#[test]
fn partial_solver_settings_keep_the_other_defaults_and_can_stop_early() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("short.json"), r#"{"sinkhorn": {"max_iters": 3}, "grid": 32}"#).unwrap();
    let out = run(dir.path(), &["counterexample", "--case", "1", "--config", "short.json"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("case1_report.json"));
    let defaults = radial_ot::gridlab::CounterexampleConfig::default().sinkhorn;
    assert_eq!(report["sinkhorn"]["max_iters"], 3);
    assert_eq!(report["sinkhorn"]["debias"], defaults.debias);
    assert_eq!(report["sinkhorn"]["epsilon"].as_f64().unwrap(), defaults.epsilon);
    assert_eq!(report["n"], 32);
    for name in ["contours.csv", "contours.geojson", "barycenter.csv", "control.csv"] {
        assert!(dir.path().join(format!("case1_{name}")).exists(), "{name}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lifespan_core::harness::sweep::{Engine, LifespanTable};
use lifespan_core::initial_data::DatumFamily;

fn lifespan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifespan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decompose_constant_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lifespan(&["decompose", "--symbol", "constant", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS parseval"));
    let csv = fs::read_to_string(dir.path().join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("n,re,im,modulus"));
    assert!(dir.path().join("decomposition.json").exists());
}

#[test]
fn simulate_without_config_is_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lifespan(&["simulate", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn malformed_config_is_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "scenario = \n").unwrap();
    let out = lifespan(&["--config", path(&cfg), "sweep", "--engine", "ode"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_report_exits_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let table = LifespanTable {
        scenario: "empty".into(),
        engine: Engine::Ode,
        dim: 1,
        family: DatumFamily::LogWeighted { alpha: 0.0 },
        rows: Vec::new(),
    };
    let table_path = dir.path().join("table.json");
    fs::write(&table_path, serde_json::to_string(&table).unwrap()).unwrap();
    let out = lifespan(&["report", "--table", path(&table_path), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no rows"));
    assert!(fs::read_to_string(dir.path().join("summary.md")).unwrap().contains("no rows"));
}

#[test]
fn ode_sweep_fit_and_report_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/ode_alpha2_d1.toml");
    let out_dir = path(dir.path());
    for args in [
        vec!["--config", cfg, "sweep", "--engine", "ode", "--out", out_dir],
        vec!["--config", cfg, "fit", "--out", out_dir],
        vec!["--config", cfg, "report", "--out", out_dir],
    ] {
        let out = lifespan(&args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for file in ["lifespans.csv", "table.json", "fit.json", "summary.md", "report_checks.json"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let svg = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().is_some_and(|x| x == "svg"));
    assert!(svg);
}

#[test]
fn lemma1_single_regime_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lifespan(&["lemma1", "--alpha", "2", "--points", "6", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("lemma1.csv").exists());
}

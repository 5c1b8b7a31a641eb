use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use pwapprox_cli::report::parse_rows;
use pwapprox_cli::{resolve, run, Experiment, ExperimentConfig, Overrides};
use pwapprox_core::spectral::TransferFunction;

fn config(json: &str) -> ExperimentConfig {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn rows(experiment: Experiment, json: &str) -> (Vec<String>, Vec<Vec<String>>) {
    parse_rows(&run(experiment, &config(json)).unwrap())
}

fn column(columns: &[String], name: &str) -> usize {
    columns.iter().position(|c| c == name).unwrap()
}

fn cli(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pwapprox"));
    cmd.args(args).current_dir(dir);
    match threads {
        Some(n) => cmd.env("PWAPPROX_THREADS", n),
        None => cmd.env_remove("PWAPPROX_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn reconstruct_error_decreases() {
    let (cols, data) = rows(
        Experiment::Reconstruct,
        r#"{"stages": [4, 8, 16, 32], "signal": {"kind": "triangle", "band": 2.5}}"#,
    );
    let err = column(&cols, "abs_error");
    let errors: Vec<f64> = data.iter().map(|r| r[err].parse().unwrap()).collect();
    assert_eq!(errors.len(), 4);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(data.iter().all(|r| r[0] == "sup" && r[1] == "sampling"));
}

#[test]
fn reconstruct_cells_are_optional() {
    let base = r#"{"stages": [2], "t_grid": [0.0, 1.0, 2.0], "engine": "oversampled", "oversampling": 2.0"#;
    let (_, sup_only) = rows(Experiment::Reconstruct, &format!("{base}}}"));
    let (cols, with_cells) = rows(Experiment::Reconstruct, &format!("{base}, \"cells\": true}}"));
    assert_eq!(sup_only.len(), 1);
    assert_eq!(with_cells.len(), 4);
    assert_eq!(with_cells[0][column(&cols, "flags")], "a=2");
}

#[test]
fn walsh_converge_limits() {
    let json = r#"{"stages": [3, 5, 7], "system": {"kind": "hilbert"}}"#;
    let (cols, data) = rows(Experiment::WalshConverge, json);
    assert_eq!(data.len(), 6);
    let err = column(&cols, "abs_error");
    for engine in data.chunks(3) {
        let e: Vec<f64> = engine.iter().map(|r| r[err].parse().unwrap()).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }
    let mut cfg = config(json);
    cfg.inclusive_limit = true;
    let (cols, data) = parse_rows(&run(Experiment::WalshConverge, &cfg).unwrap());
    assert_eq!(data.len(), 12);
    assert_eq!(data[11][column(&cols, "flags")], "limit=2^N");
}

#[test]
fn walsh_converge_zero_signal() {
    let (cols, data) = rows(Experiment::WalshConverge, r#"{"stages": [1, 2], "signal": {"kind": "zero"}}"#);
    let err = column(&cols, "abs_error");
    assert!(data.iter().all(|r| r[err] == "0.0"));
}

#[test]
fn divergence_equidistant_columns() {
    let (cols, data) = rows(Experiment::Divergence, r#"{"stages": [4, 8, 16, 32], "sequence": {"window": 32}}"#);
    let (k, g, l) = (column(&cols, "kernel_l1"), column(&cols, "dirichlet_grid"), column(&cols, "dirichlet_lebesgue"));
    for r in data.iter().filter(|r| r[0] == "stage") {
        let kernel: f64 = r[k].parse().unwrap();
        let grid_sum: f64 = r[g].parse().unwrap();
        let refined: f64 = r[l].parse().unwrap();
        assert!((kernel - grid_sum).abs() < 1e-8);
        assert!((kernel - refined).abs() < 1e-4 * refined);
    }
    assert!(data.iter().any(|r| r[0] == "fit_worst_case"));
    assert!(data.iter().any(|r| r[0] == "fit_kernel_l1"));
    assert!(data.iter().all(|r| r[column(&cols, "note")].is_empty()));
}

#[test]
fn divergence_short_stage_list_warns() {
    let (cols, data) = rows(Experiment::Divergence, r#"{"stages": [4, 8], "sequence": {"window": 8}}"#);
    let warnings: Vec<_> = data.iter().filter(|r| r[0] == "warning").collect();
    assert_eq!(warnings.len(), 2);
    assert!(warnings[0][column(&cols, "note")].contains("at least 3"));
    assert!(!data.iter().any(|r| r[0].starts_with("fit")));
}

#[test]
fn divergence_kadec_is_exploratory() {
    let (cols, data) = rows(
        Experiment::Divergence,
        r#"{"stages": [4, 8, 16], "sequence": {"rule": "kadec", "delta": 0.1, "seed": 1, "window": 16}}"#,
    );
    let note = column(&cols, "note");
    assert!(data.iter().filter(|r| r[0] != "warning").all(|r| r[note] == "exploratory"));
    assert!(data.iter().all(|r| r[0] != "stage" || r[column(&cols, "dirichlet_lebesgue")].is_empty()));
}

#[test]
fn lebesgue_rows() {
    let (cols, data) = rows(Experiment::Lebesgue, r#"{"stages": [0, 1, 64]}"#);
    assert_eq!(data[0][column(&cols, "value")], "1.0");
    assert!(data[0][column(&cols, "ratio_to_ln_n")].is_empty());
    let value: f64 = data[2][1].parse().unwrap();
    let ratio: f64 = data[2][2].parse().unwrap();
    let relative: f64 = data[2][3].parse().unwrap();
    assert_eq!(ratio, value / 64f64.ln());
    assert!((relative - ratio * PI * PI / 4.0).abs() < 1e-14);
}

#[test]
fn riesz_report() {
    let (_, data) = rows(Experiment::Riesz, r#"{"sequence": {"window": 4}, "n_max": 2, "gram": true}"#);
    let lower: f64 = data[0][3].parse().unwrap();
    assert!((lower - 1.0).abs() < 1e-12);
    assert_eq!(data.iter().filter(|r| r[0] == "eigenvalue").count(), 5);
    assert_eq!(data.iter().filter(|r| r[0] == "gram").count(), 25);
}

#[test]
fn export_kernel_round_trips() {
    let cfg = config(r#"{"grid": 512, "sequence": {"window": 8}, "system": {"kind": "adversarial", "omega": 1.0, "t": 0.3, "n": 8}}"#);
    let text = run(Experiment::ExportKernel, &cfg).unwrap();
    assert!(text.starts_with("# pwapprox export-kernel"));
    let tf = TransferFunction::read_csv(text.as_bytes()).unwrap();
    assert_eq!(tf.grid().size(), 512);
    assert_eq!(tf.sup_norm(), 1.0);
}

#[test]
fn empty_stage_list_fails_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", r#"{"stages": []}"#);
    let out = cli(dir.path(), &["reconstruct", "--config", &path], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`stages`"));
}

#[test]
fn unknown_key_fails_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", r#"{"stages": [1], "sequense": {}}"#);
    let out = cli(dir.path(), &["lebesgue", "--config", &path], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sequense"));
}

#[test]
fn grid_override_must_be_power_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", r#"{"stages": [1]}"#);
    for sub in ["reconstruct", "walsh-converge", "divergence", "lebesgue", "riesz", "export-kernel"] {
        let out = cli(dir.path(), &[sub, "--config", &path, "--grid", "3000"], None);
        assert!(!out.status.success(), "{sub}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("`grid`"), "{sub}");
    }
    let out = cli(dir.path(), &["lebesgue", "--config", &path, "--grid", "1024"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(r#""grid":1024"#));
}

#[test]
fn experiment_key_must_match_subcommand() {
    assert!(resolve(Experiment::Riesz, None, &Overrides::default()).is_ok());
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", r#"{"experiment": "lebesgue", "stages": [1]}"#);
    let err = resolve(Experiment::Riesz, Some(Path::new(&path)), &Overrides::default()).unwrap_err();
    assert!(err.to_string().contains("`experiment`"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "c.json",
        r#"{"stages": [4], "sequence": {"rule": "kadec", "delta": 0.2, "seed": 1, "window": 8}, "t_grid": [0.5]}"#,
    );
    let a = cli(dir.path(), &["reconstruct", "--config", &path], None);
    let b = cli(dir.path(), &["reconstruct", "--config", &path, "--seed", "2"], None);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&b.stdout).contains(r#""seed":2"#));
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "c.json",
        r#"{"stages": [2, 8, 32], "system": {"kind": "hilbert"}, "cells": true, "t_grid": {"start": -2, "stop": 2, "points": 41}}"#,
    );
    let one = cli(dir.path(), &["reconstruct", "--config", &path], Some("1"));
    let four = cli(dir.path(), &["reconstruct", "--config", &path], Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let bad = cli(dir.path(), &["reconstruct", "--config", &path], Some("zero"));
    assert!(!bad.status.success());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "c.json", r#"{"stages": [0, 1]}"#);
    let target = dir.path().join("report.csv");
    let out = cli(
        dir.path(),
        &["lebesgue", "--config", &path, "--out", target.to_str().unwrap()],
        None,
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.contains("\n0,1.0,,\n"));
    assert!(!text.contains('\r'));
}

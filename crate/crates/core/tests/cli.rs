mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::bandit_config;
use ope_bench::bench::reference::three_state_config;
use ope_bench::bench::MdpSource;
use ope_bench::metrics::MetricConfig;

fn ope_bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ope-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(ope_bench(&[]).status.code(), Some(1));
    assert_eq!(ope_bench(&["benchmark"]).status.code(), Some(1));
    assert_eq!(ope_bench(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ope_bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"mdp": {"reference": "three-state"}}"#).unwrap();
    let out = ope_bench(&["benchmark", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));

    let mut config = three_state_config(10, vec![1, 1]);
    config.name = "duplicate seeds".into();
    write_json(&cfg, &config);
    let out = ope_bench(&["benchmark", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct"));
}

#[test]
fn benchmark_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write_json(&cfg, &three_state_config(100, vec![0, 1]));
    let out_dir = dir.path().join("out");
    let out = ope_bench(&["benchmark", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("report.json").exists());

    let csv = ope_bench(&["report", "--in", s(&out_dir), "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("estimator,metric,k,seed,value\n"));
    let json = ope_bench(&["report", "--in", s(&out_dir.join("report.json")), "--format", "json"]);
    assert_eq!(json.status.code(), Some(0));
    assert_eq!(json.stdout, std::fs::read(out_dir.join("report.json")).unwrap());

    let bad = ope_bench(&["report", "--in", s(&out_dir), "--format", "xml"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn relative_mdp_file_resolves_against_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bandit_config(&[1.0, 2.0], 0, &[], vec![0], MetricConfig::default());
    write_json(&dir.path().join("bandit.json"), &common::bandit(&[1.0, 2.0]));
    config.mdp = MdpSource::File("bandit.json".into());
    let cfg = dir.path().join("c.json");
    write_json(&cfg, &config);
    let out = ope_bench(&["benchmark", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn estimator_failure_exits_2_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bandit_config(&[1.0, 2.0], 0, &[("other", 1)], vec![0, 1], MetricConfig::default());
    config.n_trajectories = 10;
    let cfg = dir.path().join("c.json");
    write_json(&cfg, &config);
    let out_dir = dir.path().join("out");
    let out = ope_bench(&["benchmark", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let report = ope_bench::bench::load_report(out_dir.join("report.json")).unwrap();
    assert_eq!(report.failed_seeds, vec![0, 1]);
}

#[test]
fn generate_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write_json(&cfg, &three_state_config(300, vec![0]));
    let ds = dir.path().join("d.jsonl");
    let pol = dir.path().join("p.json");
    let out = ope_bench(&[
        "generate",
        "--config",
        s(&cfg),
        "--seed",
        "5",
        "--out",
        s(&ds),
        "--policies-out",
        s(&pol),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let loaded = ope_bench::dataset::load_dataset(&ds).unwrap();
    assert_eq!((loaded.len(), loaded.seed), (300, 5));

    let out = ope_bench(&[
        "evaluate",
        "--dataset",
        s(&ds),
        "--policies",
        s(&pol),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // Header plus 5 estimators × 6 policies.
    assert_eq!(text.lines().count(), 1 + 5 * 6);
    assert!(text.lines().any(|l| l.starts_with("SNPDIS,behavior,")));

    let missing = ope_bench(&[
        "evaluate",
        "--dataset",
        "/nonexistent",
        "--policies",
        s(&pol),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

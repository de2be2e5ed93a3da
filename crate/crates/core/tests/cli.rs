use std::fs;
use std::path::Path;

use dmimo_sim::cli::main_with_args;
use dmimo_sim::experiments::{Mode, ScenarioConfig};
use dmimo_sim::rx_dsp::snr_db_from_evm;

fn write_config(dir: &Path, config: &ScenarioConfig) -> String {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.display().to_string()
}

fn small(mode: Mode, trials: usize) -> ScenarioConfig {
    ScenarioConfig { mode, trials, ..ScenarioConfig::reproduction() }
}

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["dmimo-sim"];
    v.extend_from_slice(args);
    main_with_args(v)
}

#[test]
fn run_writes_full_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Cjt, 3));
    let out = dir.path().join("out");
    assert_eq!(run(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--quiet"]), 0);
    for f in [
        "result.json",
        "trials.csv",
        "constellation_Single1.csv",
        "constellation_Single2.csv",
        "constellation_NCJT.csv",
        "constellation_CJT.csv",
        "chest_trxp1.csv",
        "chest_trxp2.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let gain = result["gain_report"]["gain_vs_1_db"].as_f64().unwrap();
    assert!(gain > 4.0 && gain < 6.6, "{gain}");
    assert!(result["resolved_config"]["noise_n0"].as_f64().unwrap() > 0.0);
    let rows = fs::read_to_string(out.join("trials.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 3);
    let chest = fs::read_to_string(out.join("chest_trxp1.csv")).unwrap();
    assert_eq!(chest.lines().count(), 1 + 288);
}

#[test]
fn mode_override_limits_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Cjt, 2));
    let out = dir.path().join("out");
    assert_eq!(run(&["run", "--config", &cfg, "--set", "mode=NCJT", "--out", out.to_str().unwrap(), "--quiet"]), 0);
    let csv = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("NCJT")));
    assert!(out.join("constellation_NCJT.csv").is_file());
    assert!(!out.join("constellation_CJT.csv").exists());
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(result["gain_report"].is_null());
}

#[test]
fn missing_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.json");
    let code = run(&["run", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut v = serde_json::to_value(small(Mode::Single1, 1)).unwrap();
    v["trxp1"]["gain_dbx"] = serde_json::Value::from(1.0);
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(run(&["validate-config", "--config", path.to_str().unwrap()]), 2);
    let good = write_config(dir.path(), &small(Mode::Single1, 1));
    assert_eq!(run(&["validate-config", "--config", &good]), 0);
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Single1, 1));
    let out = dir.path().join("sweep");
    let code = run(&[
        "sweep", "--config", &cfg, "--param", "noise_n0", "--range", "0.001:0.01:5", "--out",
        out.to_str().unwrap(), "--quiet",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "noise_n0,mean_evm_pct,snr_db_estimate,gain_db");
    assert_eq!(lines.len(), 6);
}

#[test]
fn snr_sweep_follows_evm_relation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Single1, 4));
    let out = dir.path().join("sweep");
    let code = run(&[
        "sweep", "--config", &cfg, "--param", "snr_db", "--range", "10:30:5", "--out", out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    for row in reader.records() {
        let row = row.unwrap();
        let snr: f64 = row[0].parse().unwrap();
        let evm: f64 = row[1].parse().unwrap();
        assert!((snr_db_from_evm(evm) - snr).abs() <= 0.3, "{snr} dB -> {evm}%");
    }
}

#[test]
fn empty_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Single1, 1));
    let out = dir.path().join("sweep");
    for range in ["", "1:2:0", "1:2"] {
        let code =
            run(&["sweep", "--config", &cfg, "--param", "snr_db", "--range", range, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 2, "{range:?}");
    }
    assert!(!out.exists());
}

#[test]
fn rerun_from_result_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Cjt, 3));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--quiet"]), 0);
    let resolved = a.join("result.json");
    assert_eq!(run(&["run", "--config", resolved.to_str().unwrap(), "--out", b.to_str().unwrap(), "--quiet"]), 0);
    assert_eq!(fs::read(a.join("trials.csv")).unwrap(), fs::read(b.join("trials.csv")).unwrap());
    let ra: serde_json::Value = serde_json::from_slice(&fs::read(a.join("result.json")).unwrap()).unwrap();
    let rb: serde_json::Value = serde_json::from_slice(&fs::read(b.join("result.json")).unwrap()).unwrap();
    assert_eq!(ra["summaries"], rb["summaries"]);
    assert_eq!(ra["gain_report"], rb["gain_report"]);
}

#[test]
fn seed_and_trials_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(Mode::Single2, 1));
    let out = dir.path().join("out");
    let code = run(&["run", "--config", &cfg, "--seed", "11", "--trials", "2", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code, 0);
    let result: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["resolved_config"]["seed"], 11);
    assert_eq!(result["resolved_config"]["trials"], 2);
}

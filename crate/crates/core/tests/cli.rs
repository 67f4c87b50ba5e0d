use std::path::PathBuf;
use std::process::{Command, Output};

use kinetic_limits::harness::{read_csv, SweepConfig};

fn kinlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinlab")).args(args).output().expect("kinlab runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kinlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SMALL_EXPAND: &str = r#"
epsilons = [1e-2]
sample_times = [1.0]
tau = 1.0
quantities = ["expansion_defect"]
norms = ["L2", "Linf"]

[delta]
rule = "fixed"
values = [0.2, 0.1, 0.05, 0.025]

[grid]
n_x = 32
n_v = 12
"#;

#[test]
fn expand_check_writes_csv_and_passes() {
    let cfg = scratch("expand.toml");
    std::fs::write(&cfg, SMALL_EXPAND).unwrap();
    let out = kinlab(&["expand-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(String::from_utf8_lossy(&out.stderr).contains("criterion 2 PASS"));
}

#[test]
fn out_flag_and_report_round_trip() {
    let cfg = scratch("expand2.toml");
    let csv = scratch("expand2.csv");
    std::fs::write(&cfg, SMALL_EXPAND).unwrap();
    let out = kinlab(&["expand-check", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    // The other criteria have no rows, so the full report is incomplete.
    let rep = kinlab(&["report", csv.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(2));
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("criterion 2 PASS") && text.contains("criterion 6 INCOMPLETE"), "{text}");
}

#[test]
fn failing_slope_exits_one() {
    let csv = scratch("bad.csv");
    let mut body = String::from("epsilon,delta,t,quantity,norm,value,status\n");
    for (e, v) in [(4e-3, 1e-3), (2e-3, 7e-4), (1e-3, 5e-4), (5e-4, 3.5e-4)] {
        body += &format!("{e:.16e},1.0000000000000001e-1,1.0000000000000000e0,euler_defect,L2,{v:.16e},ok\n");
    }
    std::fs::write(&csv, body).unwrap();
    let rep = kinlab(&["report", csv.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&rep.stdout).contains("failed: 6"));
}

#[test]
fn empty_records_are_incomplete() {
    let csv = scratch("empty.csv");
    std::fs::write(&csv, "epsilon,delta,t,quantity,norm,value,status\n").unwrap();
    let rep = kinlab(&["report", csv.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&rep.stdout).contains("overall INCOMPLETE"));
}

#[test]
fn config_errors_exit_two() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "epsilon = [1e-2]\n").unwrap();
    let out = kinlab(&["euler-limit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));

    std::fs::write(&cfg, "[delta]\nrule = \"coupled\"\nexponent = 1.5\n").unwrap();
    let out = kinlab(&["acoustic-limit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = kinlab(&["report", "/nonexistent/records.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn print_config_shows_the_preset() {
    let out = kinlab(&["acoustic-limit", "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = SweepConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.epsilons, vec![1e-2, 2.5e-3, 6.25e-4]);
    let out = kinlab(&["acoustic-limit", "--fixed-epsilon", "--print-config"]);
    let cfg = SweepConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.epsilons, vec![1e-3]);
}

#[test]
fn quick_operator_suite_reports_every_operator_criterion() {
    let out = kinlab(&["verify-ops", "--quick"]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let rows = read_csv(out.stdout.as_slice()).unwrap();
    assert!(rows.iter().all(|r| r.is_ok()));
    let err = String::from_utf8_lossy(&out.stderr);
    for id in ["1", "4", "5", "8"] {
        assert!(err.contains(&format!("criterion {id} ")), "{err}");
    }
}

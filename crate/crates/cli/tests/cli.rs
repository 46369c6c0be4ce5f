use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use bjj_cli::config::{parse_config, ConfigError};
use bjj_cli::presets::{command_of, PRESETS};
use serde_json::Value;

fn bjj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjj")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn classify_rabi_start() {
    let doc = json(&bjj(&["classify", "--preset", "fig5d"]));
    assert_eq!(doc["result"]["kind"], "RabiOscillation");
    assert_eq!(doc["command"], "classify");
}

#[test]
fn classify_self_trapped_start() {
    let doc = json(&bjj(&["classify", "--lambda", "10", "--z0", "0.75"]));
    assert_eq!(doc["result"]["kind"], "SelfTrapped");
    assert_eq!(doc["result"]["potential_shape"], "DoubleWell");
}

#[test]
fn attractor_finds_the_five_cycle() {
    let doc = json(&bjj(&["attractor", "--preset", "fig8b"]));
    assert_eq!(doc["result"]["kind"], "FixedCycle");
    assert_eq!(doc["result"]["order"], 5);
    assert!(doc["result"]["transient_periods"].as_u64().unwrap() > 0);
}

#[test]
fn melnikov_without_perturbation_is_zero() {
    let doc = json(&bjj(&["melnikov", "--lambda", "4", "--set", "energy=0.5", "--de1", "0", "--eta", "0"]));
    assert_eq!(as_f64(&doc["result"]["numeric"]), 0.0);
    assert_eq!(as_f64(&doc["result"]["closed_form"]), 0.0);
}

#[test]
fn melnikov_forms_agree() {
    let doc = json(&bjj(&["melnikov", "--lambda", "4", "--set", "energy=0.6", "--set", "c0=0.3", "--de1", "1.2", "--set", "omega=2.5", "--eta", "0.4"]));
    let (n, c) = (as_f64(&doc["result"]["numeric"]), as_f64(&doc["result"]["closed_form"]));
    assert!((n - c).abs() < 1e-6 * n.abs().max(1.0), "{n} vs {c}");
}

#[test]
fn crosscheck_reports_agreement() {
    let doc = json(&bjj(&["crosscheck", "--lambda", "10", "--z0", "0.5", "--t-end", "50", "--sample-dt", "0.05"]));
    assert!(as_f64(&doc["result"]["max_dz"]) < 1e-6);
}

#[test]
fn lyapunov_runs() {
    let doc = json(&bjj(&["lyapunov", "--preset", "fig5d", "--t-end", "200"]));
    assert!(as_f64(&doc["result"]["exponent"]) > 0.05);
}

#[test]
fn negative_eta_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "lambda=10\neta=-0.1\n");
    let out = bjj(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("eta") && msg.contains("line 2"), "{msg}");
}

#[test]
fn unknown_keys_are_listed_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "# header\nlambda=10\nlamda=3\ngamma=1\n");
    let out = bjj(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("`lamda` (line 3)") && msg.contains("`gamma` (line 4)"), "{msg}");
}

#[test]
fn malformed_line_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "lambda=10\nz0 0.3\n");
    let out = bjj(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(bjj(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(bjj(&["simulate", "--preset", "fig99"]).status.code(), Some(1));
    assert_eq!(bjj(&["melnikov", "--lambda", "0.5", "--set", "energy=0.5"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let out = bjj(&["simulate", "--set", "abs_tol=1e-300", "--set", "rel_tol=1e-300", "--set", "h_min=1e-4", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "lambda=10\nz0=0.6\nphi0=0.2\nde1=2.0\nomega_pi=4\nt_end=5\nsample_dt=0.05\n");
    let first = dir.path().join("first.csv").display().to_string();
    let second = dir.path().join("second.csv").display().to_string();
    assert!(bjj(&["simulate", "--config", &cfg, "--out", &first]).status.success());
    assert!(bjj(&["simulate", "--config", &first, "--out", &second]).status.success());
    let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# bjj simulate\n#: lambda=1.0000000000000000e1\n"));
    assert!(text.lines().any(|l| l == "t,z,phi,dzdt"));
}

#[test]
fn json_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json").display().to_string();
    let second = dir.path().join("second.json").display().to_string();
    assert!(bjj(&["lyapunov", "--preset", "fig6a", "--t-end", "50", "--out", &first]).status.success());
    assert!(bjj(&["lyapunov", "--config", &first, "--out", &second]).status.success());
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || bjj(&["poincare", "--preset", "fig5d", "--n-periods", "300"]).stdout;
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
}

#[test]
fn fig5_preset_matches_its_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let text = PRESETS.iter().find(|(n, _)| *n == "fig5d").unwrap().1;
    let cfg = parse_config(Path::new(&write(dir.path(), "fig5d.cfg", text))).unwrap();
    assert_eq!((cfg.initial.z, cfg.initial.phi), (0.5, 0.0));
    assert_eq!((cfg.trap.de0, cfg.trap.lambda, cfg.trap.eta, cfg.trap.de1), (0.0, 10.0, 0.0, 7.5));
    assert_eq!(cfg.trap.omega, 4.0 * PI);
}

#[test]
fn lone_lambda_file_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(Path::new(&write(dir.path(), "l.cfg", "lambda=10\n"))).unwrap();
    assert_eq!(cfg.trap.lambda, 10.0);
    let missing = parse_config(&dir.path().join("missing.cfg")).unwrap_err();
    assert!(matches!(missing, ConfigError::Io { .. }));
}

#[test]
fn every_preset_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in PRESETS {
        let command = command_of(text).unwrap_or_else(|| panic!("{name} names no command"));
        let out_path = dir.path().join(format!("{name}.out")).display().to_string();
        let out = bjj(&[command, "--preset", name, "--out", &out_path]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(std::fs::metadata(&out_path).unwrap().len() > 0, "{name}");
    }
}

#[test]
fn presets_subcommand_lists_everything() {
    let out = bjj(&["presets"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), PRESETS.len());
    assert!(text.contains("fig9b"));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_semipit"));
    c.env_remove("SEMIPIT_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "freq_hz,re_ohm,im_ohm,mag_db");
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn sweep_csv_peaks_at_gesture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("up.csv");
    let o = run(&["sweep", "scroll-up", "--noise-sigma", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 251);
    let best = rows.iter().max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
    assert!((best[0] - 28.0e6).abs() <= 10e3, "{}", best[0]);
}

#[test]
fn sweep_without_coupling_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("null.csv");
    let o = run(&["sweep", "press", "--k", "0", "--noise-sigma", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    for r in csv_rows(&out) {
        assert_eq!((r[1], r[2]), (0.0, 0.0));
        assert_eq!(r[3], f64::NEG_INFINITY);
    }
}

#[test]
fn sweep_s1p_header() {
    let o = run(&["sweep", "press", "--format", "s1p"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let option = text.lines().find(|l| l.starts_with('#')).unwrap();
    assert_eq!(option, "# HZ S RI R 50");
    assert!(text.lines().next().unwrap().starts_with('!'));
}

#[test]
fn unknown_gesture_is_an_error() {
    let o = run(&["sweep", "wiggle"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classify_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for (fmt, ext) in [("csv", "csv"), ("s1p", "s1p")] {
        let trace = dir.path().join(format!("down.{ext}"));
        assert!(run(&["sweep", "scroll-down", "--seed", "5", "--format", fmt, "--out", trace.to_str().unwrap()]).status.success());
        let o = run(&["classify", trace.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["label"], "ScrollDown");
        assert!((v["f_peak_mhz"].as_f64().unwrap() - 28.4).abs() < 0.05);
        assert!(v["snr_db"].as_f64().unwrap() > 10.0);
    }

    let noise = dir.path().join("noise.csv");
    assert!(run(&["sweep", "press", "--k", "0", "--out", noise.to_str().unwrap()]).status.success());
    let o = run(&["classify", noise.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["label"], "NoInput");

    let flat = dir.path().join("flat.csv");
    assert!(run(&["sweep", "--k", "0", "--noise-sigma", "0", "--out", flat.to_str().unwrap()]).status.success());
    assert_eq!(run(&["classify", flat.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn classify_truncated_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    assert!(run(&["sweep", "press", "--out", full.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&full).unwrap();
    let cut = dir.path().join("cut.csv");
    fs::write(&cut, &text[..text.len() / 2 - 7]).unwrap();
    let o = run(&["classify", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!o.stderr.is_empty());

    let header_only = dir.path().join("h.csv");
    fs::write(&header_only, "freq_hz,re_ohm,im_ohm,mag_db\n").unwrap();
    assert_eq!(run(&["classify", header_only.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["classify", "/nonexistent/trace.csv"]).status.code(), Some(1));
}

#[test]
fn session_all_gestures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["session", scenario("all-gestures").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let summary = json(&o);
    assert_eq!(summary["accuracy"], 1.0);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["accuracy"], 1.0);
    let events = fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    let labels: Vec<String> = events
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
            assert_eq!(keys, ["f_peak_mhz", "label", "snr_db", "t_ms"]);
            v["label"].as_str().unwrap().to_string()
        })
        .collect();
    assert_eq!(labels, ["ScrollUp", "ScrollDown", "ScrollLeft", "ScrollRight", "Press"]);
}

#[test]
fn session_empty_and_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["session", scenario("empty").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("events.jsonl")).unwrap(), "");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["decoded"].as_array().unwrap().len(), 0);

    let bad = tempfile::tempdir().unwrap();
    let o = run(&["session", scenario("overlapping").to_str().unwrap(), "--out", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("events[2]"), "{err}");
    assert!(!bad.path().join("report.json").exists());
}

#[test]
fn sessions_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&["session", scenario("all-gestures").to_str().unwrap(), "--seed", "42", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["report.json", "events.jsonl"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn calibrate_report() {
    let v = json(&run(&["calibrate"]));
    assert!((v["ring"]["c_fixed_pf"].as_f64().unwrap() - 100.8).abs() < 0.05);
    assert!((v["ring"]["c_varseg_pf"].as_f64().unwrap() - 21.9).abs() < 0.05);
    let codes: Vec<u64> = v["codes"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(codes, [0, 96, 164, 215, 255]);
    assert!((v["wrist"]["f0_mhz"].as_f64().unwrap() - 27.73).abs() < 0.01);
}

#[test]
fn power_report() {
    let v = json(&run(&["power"]));
    for key in ["p_active_uw", "p_standby_uw", "avg_uw", "life_h_energy_model", "life_h_charge_model"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert!((v["life_h_energy_model"].as_f64().unwrap() - 92.5).abs() < 1e-9);
    assert_eq!(v["charge_model_consistent"], false);
}

#[test]
fn coupling_report() {
    let v = json(&run(&["coupling"]));
    assert!(v["m_nh_tilted"].as_f64().unwrap().abs() > v["m_nh_0deg"].as_f64().unwrap().abs());
    assert_eq!(v["tilt_increases_coupling"], true);
    assert_eq!(v["tilt_deg"], 20.0);
}

#[test]
fn json_commands_reject_trace_formats() {
    assert_eq!(run(&["power", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn flags_override_config_file_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"wrist": {"inductance_uh": 3.5}}"#).unwrap();
    let f0 = |v: &Value| v["wrist"]["f0_mhz"].as_f64().unwrap();

    let default = f0(&json(&run(&["calibrate"])));
    let from_file = f0(&json(&run(&["calibrate", "--config", cfg.to_str().unwrap()])));
    let from_env = f0(&json(&bin().args(["calibrate"]).env("SEMIPIT_CONFIG", &cfg).output().unwrap()));
    let flag = f0(&json(&run(&["calibrate", "--config", cfg.to_str().unwrap(), "--wrist-l-uh", "3.0"])));
    let oracle = |l: f64| 1.0 / (2.0 * std::f64::consts::PI * (l * 1e-6 * 140e-12 / 17.0).sqrt()) / 1e6;

    assert!((default - oracle(4.0)).abs() < 1e-9);
    assert!((from_file - oracle(3.5)).abs() < 1e-9);
    assert_eq!(from_env, from_file);
    assert!((flag - oracle(3.0)).abs() < 1e-9);
}

#[test]
fn invalid_config_lists_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"ring": {"inductance_uh": -2.0}, "battery": {"conversion_efficiency": 2.0}}"#).unwrap();
    let o = run(&["power", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ring.inductance_uh") && err.contains("battery"), "{err}");

    fs::write(&cfg, r#"{"sweep": {"n_points": -1}}"#).unwrap();
    let err = String::from_utf8_lossy(&run(&["power", "--config", cfg.to_str().unwrap()]).stderr).to_string();
    assert!(err.contains("sweep.n_points"), "{err}");
}

#[test]
fn shipped_defaults_reproduce_builtin_outputs() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("paper-defaults.json");
    for cmd in ["calibrate", "power"] {
        let a = run(&[cmd]);
        let b = run(&[cmd, "--config", shipped.to_str().unwrap()]);
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn sweeps_are_deterministic() {
    let a = run(&["sweep", "scroll-left", "--seed", "9"]);
    let b = run(&["sweep", "scroll-left", "--seed", "9"]);
    let c = run(&["sweep", "scroll-left", "--seed", "10"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--points", "many"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

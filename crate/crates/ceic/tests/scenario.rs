use std::path::{Path, PathBuf};
use std::process::Command;

use ceic::runner::{execute, parse_metrics_csv, regenerate_summary, RunOptions, EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK};
use ceic::scenario::Scenario;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn ceic_bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ceic")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn cart_pole_text(dt: f64) -> String {
    let text = std::fs::read_to_string(shipped("triple_ceic.cfg")).unwrap();
    let mut scn = Scenario::parse(&text).unwrap();
    scn.system.model = ceic::scenario::ModelKind::CartPole;
    scn.system.masses = vec![0.3];
    scn.system.lengths = vec![0.2];
    scn.system.com = vec![0.1];
    scn.controller.gains.truncate(2);
    scn.simulation.initial_q = vec![0.5, 0.1];
    scn.simulation.dt = dt;
    scn.reference.amplitude = 0.5;
    scn.to_toml()
}

#[test]
fn shipped_scenarios_round_trip() {
    for name in ["triple_ceic.cfg", "triple_eic.cfg"] {
        let scn = Scenario::load(&shipped(name)).unwrap();
        let text = scn.to_toml();
        let again = Scenario::parse(&text).unwrap();
        assert_eq!(scn, again);
        assert_eq!(text, again.to_toml());
    }
}

#[test]
fn unknown_keys_are_named() {
    let text = std::fs::read_to_string(shipped("triple_ceic.cfg")).unwrap();
    let bad = text.replace("duration = 30.0", "duration = 30.0\nhorizon = 5.0");
    let err = Scenario::parse(&bad).unwrap_err().to_string();
    assert!(err.contains("horizon"), "{err}");
    let bad = text.replace("[output]", "[plotting]\nstyle = 1\n\n[output]");
    assert!(Scenario::parse(&bad).unwrap_err().to_string().contains("plotting"));
}

#[test]
fn gain_count_must_match_levels() {
    let text = std::fs::read_to_string(shipped("triple_ceic.cfg")).unwrap();
    let scn = Scenario::parse(&text.replace("[50.0, 15.0]]", "]").replace(", ]", "]")).unwrap();
    let err = execute(&scn, "x", &RunOptions::default()).unwrap_err().to_string();
    assert!(err.contains("controller.gains"), "{err}");
}

#[test]
fn missing_gains_exit_one_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(shipped("triple_ceic.cfg")).unwrap();
    let cfg = dir.path().join("bad.cfg");
    let gains_line = text.lines().find(|l| l.starts_with("gains")).unwrap();
    std::fs::write(&cfg, text.replace(gains_line, "")).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = ceic_bin(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("gains"), "{err}");
    assert!(!out.exists());
}

#[test]
fn eic_scenario_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = ceic_bin(&["run", shipped("triple_eic.cfg").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_DIVERGED);
    assert!(stdout.contains("diverged at t="), "{stdout}");
    for f in ["trajectory.csv", "metrics.csv", "conditions.txt", "summary.txt", "plot.gp"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let conditions = std::fs::read_to_string(dir.path().join("conditions.txt")).unwrap();
    assert!(conditions.contains("rank(D_ua D_ua^+) = 1, deficiency = 2"));
}

#[test]
fn summary_regenerates_from_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cart_pole.cfg");
    std::fs::write(&cfg, cart_pole_text(1e-3)).unwrap();
    let out = dir.path().join("run");
    let (code, _, err) = ceic_bin(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code, EXIT_OK, "{err}");
    let written = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(regenerate_summary(&out).unwrap(), written);
    let (record, metrics) = parse_metrics_csv(&std::fs::read_to_string(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(record.outcome, "completed");
    assert_eq!(metrics.unwrap().rows.len(), 2);
    let header = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,q_x,q_theta1,"));
}

// Halving dt moves the cart error by under 5%. The link error is ~7e-5 rad
// and still converging at 1 ms, so only its direction is checked.
#[test]
fn dt_override_and_step_halving() {
    let scn = Scenario::parse(&cart_pole_text(1e-3)).unwrap();
    let a = execute(&scn, "a", &RunOptions::default()).unwrap();
    let b = execute(&scn, "b", &RunOptions { dt: Some(5e-4), ..RunOptions::default() }).unwrap();
    assert_eq!(b.record.dt, 5e-4);
    assert_eq!(b.record.steps, 2 * a.record.steps);
    let (ma, mb) = (a.metrics.unwrap(), b.metrics.unwrap());
    for ra in &ma.rows {
        let rb = mb.get(&ra.name).unwrap();
        assert!(rb.mean_abs < ra.mean_abs, "{}: {} vs {}", ra.name, ra.mean_abs, rb.mean_abs);
        assert!(ra.rel_mean < 5.0);
        if ra.name == "e_r" {
            assert!((ra.mean_abs - rb.mean_abs).abs() < 0.05 * ra.mean_abs);
        }
    }
}

#[test]
fn compare_identical_and_mismatched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cp.cfg");
    std::fs::write(&cfg, cart_pole_text(1e-3)).unwrap();
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("cmp");
    let (code, stdout, _) = ceic_bin(&["compare", c, c, "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    for line in stdout.lines().filter(|l| l.starts_with('|')) {
        let diff: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(diff, 0.0, "{line}");
    }
    assert!(out.join("compare.gp").exists() && out.join("cp_a/metrics.csv").exists());

    let (code, _, err) = ceic_bin(&["compare", c, shipped("triple_eic.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("system"), "{err}");
}

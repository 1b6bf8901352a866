use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use uam_cli::{parse_metrics, validation_ledger, CheckStatus};
use uam_core::Scenario;

fn uam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uam")).args(args).output().expect("binary runs")
}

fn metric(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("metrics.txt")).unwrap();
    parse_metrics(&text).unwrap().into_iter().find(|(k, _)| k == key).map(|(_, v)| v).unwrap_or_default()
}

#[test]
fn simulate_builtin_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = uam(&["simulate", "--scenario", "table1-5perlayer", "--out", out, "--set", "duration=5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace.csv", "events.csv", "metrics.txt", "series/velocity_x_0.csv", "series/trajectory_9.csv", "series/field_total.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,id,x,h,vx,vy,layer,mode,capacity_bps,active_ris_id\n"));
    assert_eq!(trace.lines().count(), 1 + 50 * 10);
    assert_eq!(metric(dir.path(), "aircraft"), "10");
    assert_eq!(metric(dir.path(), "scenario"), "table1-5perlayer");
}

#[test]
fn stationary_override_sends_no_requests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = uam(&["simulate", "--scenario", "table1-5perlayer", "--out", out, "--set", "ris_mode=StationaryRis(400,100)"]);
    assert!(o.status.success());
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(!events.contains("LS_REQ"));
    assert_eq!(metric(dir.path(), "ls_requests"), "0");
}

#[test]
fn seed_override_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = uam(&["simulate", "--out", d.path().to_str().unwrap(), "--seed", "7", "--set", "duration=20"]);
        assert!(o.status.success());
    }
    for f in ["trace.csv", "events.csv", "metrics.txt", "series/force_total.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(metric(a.path(), "seed"), "7");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = uam(&["simulate", "--out", out, "--set", "weights.nope=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
    let o = uam(&["simulate", "--out", out, "--scenario", "no-such-scenario"]);
    assert!(!o.status.success());

    let cfg = dir.path().join("broken.cfg");
    fs::write(&cfg, "seed = 3\nduration = soon\n").unwrap();
    let o = uam(&["simulate", "--out", out, "--scenario", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.cfg:2"));
}

#[test]
fn scenario_file_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(&cfg, "# two aircraft\nduration = 1\naircraft.0 = 1, 100\naircraft.1 = 2, 300\n").unwrap();
    let out = dir.path().join("out");
    let o = uam(&["simulate", "--scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(metric(&out, "scenario"), "tiny");
    assert_eq!(metric(&out, "aircraft"), "2");
}

#[test]
fn delay_bounds_at_zero_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = uam(&["delay-bounds", "--scenario", "fig5-delay-bounds", "--out", out, "--set", "netcalc.load_max=20", "--set", "netcalc.load_step=5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("delay_bounds.csv")).unwrap();
    let mut zero_rows = 0;
    for line in table.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[1].parse::<f64>().unwrap() == 0.0 {
            assert!(cols[3].parse::<f64>().unwrap() < 1e-6, "{line}");
            zero_rows += 1;
        }
    }
    assert_eq!(zero_rows, 3);
    assert!(dir.path().join("series/failure_ris.csv").exists());
}

#[test]
fn phase_sweep_continuous_dominates_each_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = uam(&["phase-sweep", "--scenario", "fig9-phase-resolution", "--out", out, "--set", "duration=10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |label: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join(format!("series/capacity_{label}.csv")))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let cont = read("continuous");
    assert!(!cont.is_empty());
    for label in ["pi", "pi_3", "pi_4", "pi_6", "pi_12", "fixed-zero"] {
        let s = read(label);
        assert_eq!(s.len(), cont.len());
        for (c, v) in cont.iter().zip(&s) {
            assert!(*c + 1e-9 >= *v, "{label}: {v} > {c}");
        }
    }
}

#[test]
fn validate_ledger() {
    let o = uam(&["validate"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS") && !text.contains("FAIL"));
    let ledger = validation_ledger(&Scenario::default());
    assert!(ledger.iter().any(|c| c.status == CheckStatus::Note));
    let off = Scenario { p_ls: 0.2, ..Scenario::default() };
    assert!(validation_ledger(&off).iter().any(|c| c.status == CheckStatus::Fail));
    let o = uam(&["validate", "--set", "p_ls=0.2"]);
    assert!(!o.status.success());
}

#[test]
fn every_builtin_parses() {
    for name in uam_cli::builtins::names() {
        let s = uam_cli::builtins::builtin(name).unwrap().unwrap();
        assert_eq!(s.name, name);
    }
}

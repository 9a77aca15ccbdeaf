use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::{Command, Output};

use fmpulse::{tables, PulseSpec};

fn fmpulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmpulse")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tables_lists_all_pulses() {
    let o = fmpulse(&["tables"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in tables::names() {
        assert!(text.contains(name), "{name}");
    }
    assert!(text.contains("b14 = +0.04585897"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fmpulse(&["check", "--pulse", "fm-1-pi", "--order", "3"]).status.code(), Some(2));
    assert_eq!(fmpulse(&["check", "--pulse", "no-such-pulse", "--order", "1"]).status.code(), Some(2));
    assert_eq!(fmpulse(&["frobnicate"]).status.code(), Some(2));
    let o = fmpulse(&["solve", "--order", "1", "--angle", "pi", "--minimize", "--extra", "b14", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn check_flat_pulse_fails_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("flat.pulse");
    std::fs::write(&file, PulseSpec::flat(PI, FRAC_PI_2).unwrap().serialize()).unwrap();
    let o = fmpulse(&["check", "--pulse", path_str(&file), "--order", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("6.366198e-1"), "{}", stderr(&o));
    assert!(stdout(&o).contains("eta11"));
}

#[test]
fn check_with_loose_tolerance_passes_table_pulse() {
    let o = fmpulse(&["check", "--pulse", "FM-1-PI", "--order", "1", "--grid", "8192", "--tol", "1e-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS"));
    let row = text.lines().find(|l| l.starts_with("FM-1-PI,")).expect("csv row");
    assert_eq!(row.split(',').count(), 13);
}

#[test]
fn export_trajectory_and_round_trip_pulse() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let copy = dir.path().join("copy.pulse");
    let o = fmpulse(&["export", "--pulse", "fm-2-pi2", "--grid", "512", "--out", path_str(&csv), "--pulse-out", path_str(&copy)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,phi,vx,vy,psi,theta,varphi,ax,ay,az"));
    assert_eq!(lines.count(), 513);
    let back = PulseSpec::parse(&std::fs::read_to_string(&copy).unwrap()).unwrap();
    let orig = tables::builtin("FM-2-PI2").unwrap();
    assert_eq!(back.v0(), orig.v0());
    assert_eq!(back.coeffs().collect::<Vec<_>>(), orig.coeffs().collect::<Vec<_>>());
}

#[test]
fn export_lab_frame_waveform() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lab.csv");
    let o = fmpulse(&["export", "--pulse", "fm-1-pi", "--grid", "256", "--larmor", "0", "--out", path_str(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,hx,hy\n"));
    let v0 = tables::builtin("FM-1-PI").unwrap().v0();
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1].hypot(f[2]) - v0).abs() < 1e-12);
    }
}

#[test]
fn verify_writes_scaling_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("verify.csv");
    let o = fmpulse(&["verify", "--pulse", "fm-1-pi", "--steps", "1024", "--out", path_str(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("slope 1.99") || stdout(&o).contains("slope 2.0"), "{}", stdout(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with("slope=")).count(), 9);
    assert!(text.lines().last().unwrap().starts_with("slope="));
}

#[test]
fn verify_rejects_bad_bath_file() {
    let dir = tempfile::tempdir().unwrap();
    let bath = dir.path().join("bad.bath");
    std::fs::write(&bath, "n_spins = 1\nlambda = 1\nbogus = 2\n").unwrap();
    let out = dir.path().join("v.csv");
    let o = fmpulse(&["verify", "--pulse", "fm-1-pi", "--bath", path_str(&bath), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn solve_first_order_from_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solved.pulse");
    let o = fmpulse(&["solve", "--order", "1", "--angle", "pi2", "--seeds", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("iter,max_residual,V0,step_norm\n"));
    let p = PulseSpec::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((p.chi() - FRAC_PI_2).abs() < 1e-15);
    let o = fmpulse(&["check", "--pulse", path_str(&out), "--order", "1", "--tol", "1e-9"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex;
use mra_core::signal::{idft, write_signal_csv};
use mra_core::FourierSignal;

fn mra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mra")).args(args).output().expect("spawn mra")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_fourier_signal(path: &Path, coeffs: &[(f64, f64)]) {
    let f = FourierSignal::real_origin(coeffs.iter().map(|&(re, im)| Complex::new(re, im)).collect()).unwrap();
    write_signal_csv(path, &idft(&f).unwrap()).unwrap();
}

#[test]
fn version_and_help_exit_zero() {
    let v = mra(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v).trim(), "mra 0.1.0 (mra-core)");
    assert_eq!(mra(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mra(&[]).status.code(), Some(1));
    assert_eq!(mra(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(mra(&["verify-theory", "--k-max", "lots"]).status.code(), Some(1));
    let o = mra(&["march", "--moments", "/nonexistent/moments.json", "--out", "/tmp/x.json"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn simulate_then_recover_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = mra(&["simulate", "--n", "21", "--sigma", "0", "--samples", "50", "--group", "dihedral", "--seed", "5", "--out", p(&sim)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["truth.csv", "moments.json", "manifest.json"] {
        assert!(sim.join(f).exists(), "{f}");
    }
    let report = dir.path().join("recover.json");
    let moments = sim.join("moments.json");
    let truth = sim.join("truth.csv");
    let o = mra(&[
        "recover", "--moments", p(&moments), "--inits", "20", "--seed", "1", "--third-only", "--truth", p(&truth), "--out",
        p(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let err = v["aligned_error"].as_f64().unwrap();
    assert!(err < 1e-6, "aligned error {err}");
    assert_eq!(v["inits"], 20);
}

#[test]
fn recover_rejects_group_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("x.csv");
    write_fourier_signal(&sig, &[(1.0, 0.0), (0.5, 0.2), (0.3, -0.4), (0.3, 0.4), (0.5, -0.2)]);
    let m = dir.path().join("m.json");
    assert_eq!(mra(&["invariants", "--signal", p(&sig), "--group", "cyclic", "--out", p(&m)]).status.code(), Some(0));
    let o = mra(&["recover", "--moments", p(&m), "--group", "dihedral", "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("moments are for the cyclic group but dihedral was requested"), "{}", stderr(&o));
}

#[test]
fn sign_search_finds_two_orbits_on_degenerate_instance() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("x.csv");
    write_fourier_signal(&sig, &[(1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.0, 1.0), (0.0, -1.0)]);
    let m = dir.path().join("m.json");
    assert_eq!(mra(&["invariants", "--signal", p(&sig), "--group", "dihedral", "--out", p(&m)]).status.code(), Some(0));
    let o = mra(&["sign-search", "--moments", p(&m)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["orbits"].as_array().unwrap().len(), 2);
}

#[test]
fn sign_search_reports_vanishing_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("x.csv");
    write_fourier_signal(&sig, &[(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
    let m = dir.path().join("m.json");
    assert_eq!(mra(&["invariants", "--signal", p(&sig), "--group", "dihedral", "--out", p(&m)]).status.code(), Some(0));
    let o = mra(&["sign-search", "--moments", p(&m)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("vanishing Fourier coefficient at ℓ=2"), "{}", stderr(&o));
    let o = mra(&["sign-search", "--moments", p(&m), "--n-max", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn march_recovers_cyclic_signal() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("x.csv");
    write_fourier_signal(&sig, &[(1.0, 0.0), (0.5, 0.2), (0.3, -0.4), (0.3, 0.4), (0.5, -0.2)]);
    let m = dir.path().join("m.json");
    let out = dir.path().join("est.json");
    assert_eq!(mra(&["invariants", "--signal", p(&sig), "--group", "cyclic", "--out", p(&m)]).status.code(), Some(0));
    let o = mra(&["march", "--moments", p(&m), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["estimate"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_theory_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theory.json");
    let o = mra(&["verify-theory", "--k-max", "30", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(", 0 failed"));
    assert!(out.exists());
}

#[test]
fn length_sweep_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = mra(&[
        "experiment", "length-sweep", "--n-min", "5", "--n-max", "10", "--step", "5", "--trials", "3", "--seed", "2", "--serial",
        "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["rows.csv", "aggregates.csv", "figure.svg", "summary.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let svg = dir.path().join("replot.svg");
    let o = mra(&["plot", "--in", p(&out.join("rows.csv")), "--out", p(&svg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&svg).unwrap(), std::fs::read(out.join("figure.svg")).unwrap());
}

#[test]
fn noise_sweep_writes_noise_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("noise");
    let o = mra(&[
        "experiment", "noise-sweep", "--n", "7", "--sigmas", "0,0.5", "--samples", "2000", "--trials", "2", "--groups", "cyclic",
        "--out", p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["noise_rows.csv", "noise_aggregates.csv", "noise_scaling.csv", "figure.svg", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

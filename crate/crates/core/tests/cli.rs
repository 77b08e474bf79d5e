use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use orbitcert::cli::{run, Mode, PhiSpec, RunConfig};
use orbitcert::models::ModelKind;
use tempfile::tempdir;

fn orbitcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitcert")).args(args).output().unwrap()
}

fn reports(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "summary.json")
        .collect();
    names.sort();
    names
}

fn config(model: ModelKind, n: usize, mode: Mode, out: &Path) -> RunConfig {
    RunConfig { model, n, mode, phi: PhiSpec::default(), out: out.to_path_buf(), ..Default::default() }
}

#[test]
fn ideal_mode_writes_one_passing_report_per_phi() {
    let dir = tempdir().unwrap();
    let s = run(&config(ModelKind::Sl, 3, Mode::Ideal, dir.path())).unwrap();
    assert!(s.passed);
    assert_eq!(s.rows.len(), 3);
    assert_eq!(reports(dir.path()).len(), 3);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(&reports(dir.path())[0])).unwrap()).unwrap();
    assert_eq!(r["verdict"], "pass");
    assert!(r["checks"].as_array().unwrap().len() >= 4);
}

#[test]
fn geometry_mode_on_hyperbolic_space() {
    let dir = tempdir().unwrap();
    let s = run(&config(ModelKind::So1n, 3, Mode::Geometry, dir.path())).unwrap();
    assert!(s.passed);
    assert_eq!(s.rows.len(), 1);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(&reports(dir.path())[0])).unwrap()).unwrap();
    assert!((r["einstein_constant"].as_f64().unwrap() + 0.5).abs() < 1e-9);
}

#[test]
fn hopf_congruence_through_the_binary() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = orbitcert(&["--model", "hopf", "--n", "2", "--mode", "congruence", "--pairs", "3", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(reports(dir.path()).len(), 1);
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "model = \"sl\"\nn = 3\nbogus = 1\n").unwrap();
    let o = orbitcert(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = orbitcert(&["--model", "sl", "--n", "3", "--phi", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("phi"));

    let o = orbitcert(&["--model", "sl", "--n", "3", "--tol-orbit", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tol_orbit"));
}

#[test]
fn impossible_tolerance_exits_with_one() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = orbitcert(&["--model", "sl", "--n", "2", "--mode", "congruence", "--pairs", "2", "--budget", "8", "--tol-orbit", "1e-300", "--out", out]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    for d in [&a, &b] {
        let o = orbitcert(&["--model", "so1n", "--n", "3", "--mode", "all", "--pairs", "3", "--budget", "16", "--seed", "5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let names = reports(a.path());
    assert_eq!(names, reports(b.path()));
    for n in names.iter().chain(std::iter::once(&"summary.json".to_string())) {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn v_spec_file_runs_ideal_and_congruence() {
    let dir = tempdir().unwrap();
    let v = dir.path().join("v.txt");
    fs::write(&v, "# a line in a\n1 1\n").unwrap();
    let out = dir.path().join("out");
    let o = orbitcert(&["--model", "sl", "--n", "3", "--v", v.to_str().unwrap(), "--pairs", "2", "--budget", "16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(reports(&out).iter().any(|n| n.starts_with("ideal-sl3-v")));
    assert!(reports(&out).iter().any(|n| n.starts_with("congruence-sl3-v")));
}

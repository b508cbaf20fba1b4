use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn skewbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewbm")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SKEW: &str = "[[atoms]]\nlocation = 0\nweight = \"1/2\"\n";

#[test]
fn analyze_exit_codes() {
    let dir = TempDir::new().unwrap();
    let skew = spec(dir.path(), "skew.toml", SKEW);
    let out = dir.path().join("report.json");
    let o = skewbm(&["analyze", skew.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["unique"]["verdict"], "true");

    let unit = spec(dir.path(), "unit.toml", "[[atoms]]\nlocation = 0\nweight = 1\n");
    let unit_out = dir.path().join("unit.json");
    let o = skewbm(&["analyze", unit.to_str().unwrap(), "--out", unit_out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(unit_out.exists(), "report is written even without a process");

    let bad = spec(dir.path(), "bad.toml", "[[atoms]]\nlocation = 0\nweight = \"1/x\"\n");
    let o = skewbm(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = skewbm(&["analyze", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let skew = spec(dir.path(), "skew.toml", SKEW);
    let a = skewbm(&["analyze", skew.to_str().unwrap()]);
    let b = skewbm(&["analyze", skew.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

fn cantor_json(args: &[&str]) -> (i32, serde_json::Value) {
    let o = skewbm(&[&["cantor"], args].concat());
    let v = serde_json::from_slice(&o.stdout).unwrap_or(serde_json::Value::Null);
    (code(&o), v)
}

#[test]
fn cantor_regimes() {
    let (c, v) = cantor_json(&["--alpha", "1/3", "--gap-model", "power-law"]);
    assert_eq!(c, 0);
    assert_eq!(v["verdict"]["regime"], "unique");

    let (c, v) = cantor_json(&["--alpha", "0.2", "--beta", "0.45"]);
    assert_eq!(c, 0);
    assert_eq!(v["verdict"]["regime"], "infinitely_many_irreducible");
    let constants = &v["constants"];
    assert!(constants.is_object(), "{v}");

    let (c, _) = cantor_json(&["--alpha", "1.2"]);
    assert_eq!(c, 1);
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let skew = spec(dir.path(), "skew.toml", "[[atoms]]\nlocation = 0\nweight = 0.5\n");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = skewbm(&[
            "simulate",
            skew.to_str().unwrap(),
            "--paths",
            "300",
            "--dt",
            "1e-3",
            "--grid",
            "0.05",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["occupation.csv", "local_time.csv", "drift.csv", "paths_euler.csv", "paths_walk.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs");
        assert!(!x.is_empty());
    }
    let occ = fs::read_to_string(a.join("occupation.csv")).unwrap();
    assert!(occ.lines().any(|l| l.starts_with("euler,(0,inf),1,")), "{occ}");
    let paths = fs::read_to_string(a.join("paths_walk.csv")).unwrap();
    assert_eq!(paths.lines().next(), Some("path_id,t,x"));
}

#[test]
fn simulate_without_atoms_has_no_drift() {
    let dir = TempDir::new().unwrap();
    let flat = spec(dir.path(), "flat.toml", "");
    let out = dir.path().join("out");
    let o = skewbm(&[
        "simulate",
        flat.to_str().unwrap(),
        "--paths",
        "200",
        "--scheme",
        "walk",
        "--grid",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let drift = fs::read_to_string(out.join("drift.csv")).unwrap();
    let row: Vec<&str> = drift.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "walk");
    let residual: f64 = row[1].parse().unwrap();
    assert!(residual.abs() < 1e-12, "{drift}");
}

#[test]
fn simulate_refuses_without_a_process() {
    let dir = TempDir::new().unwrap();
    let unit = spec(dir.path(), "unit.toml", "[[atoms]]\nlocation = 0\nweight = 1\n");
    let out = dir.path().join("out");
    let o = skewbm(&["simulate", unit.to_str().unwrap(), "--paths", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.join("occupation.csv").exists());
}

#[test]
fn construct_writes_density_and_constants() {
    let dir = TempDir::new().unwrap();
    let skew = spec(dir.path(), "skew.toml", SKEW);
    let out = dir.path().join("c");
    let o = skewbm(&[
        "construct",
        skew.to_str().unwrap(),
        "--range",
        "-1",
        "1",
        "--points",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let density = fs::read_to_string(out.join("density.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        density.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    // μ = ½δ₀ is the 3/4-skew case: ρ(0−)/ρ(0+) = (1 − α)/α = 1/3
    let ratio = rows[0][1] / rows[2][1];
    assert!((ratio - 1.0 / 3.0).abs() < 1e-12, "{density}");
    assert!(fs::read_to_string(out.join("constants.csv")).unwrap().starts_with("label,a,b,c\n"));
}

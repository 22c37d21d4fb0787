use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_worldsheet"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn csv(dir: &Path, name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(dir.join("out").join(name))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn clifford_torus_invariants_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["invariants"], "scenario = clifford-torus\n[grid]\nsize = 64\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(dir.path(), "invariants.csv");
    let (near, dev) = (column(&rows, "nearest"), column(&rows, "deviation"));
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        assert_eq!(r[near], "0");
        assert!(r[dev].parse::<f64>().unwrap() <= 1e-8);
    }
}

#[test]
fn wobbled_string_symplectic_form_is_slice_independent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["symplectic"], "scenario = wobbled-string\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(dir.path(), "symplectic.csv");
    assert_eq!(rows.len(), 6);
    let stat = column(&rows, "statistic");
    assert!(rows[1][stat].parse::<f64>().unwrap() <= 1e-5);
}

#[test]
fn bad_grid_and_inapplicable_commands_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["geometry"], "scenario = clifford-torus\n[grid]\nsize = 15\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
    assert_eq!(run(dir.path(), &["invariants"], "scenario = wobbled-string\n").status.code(), Some(1));
    assert_eq!(run(dir.path(), &["geometry"], "").status.code(), Some(1));
    assert_eq!(run(dir.path(), &["geometry"], "colour = red\n").status.code(), Some(1));
}

#[test]
fn verify_without_gauss_bonnet_coupling_skips_its_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"], "[couplings]\nsigma1 = 0\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = csv(dir.path(), "verify.csv");
    let (group, status) = (column(&rows, "group"), column(&rows, "status"));
    // kernel algebra rows (group 9) do not depend on the coupling and still run
    let gb: Vec<_> = rows[1..].iter().filter(|r| r[group] == "7").collect();
    assert!(!gb.is_empty());
    assert!(gb.iter().all(|r| r[status] == "skipped"));
}

#[test]
fn coarse_grid_violates_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"], "[grid]\nsize = 16\n");
    assert_eq!(out.status.code(), Some(2));
    let rows = csv(dir.path(), "verify.csv");
    let status = column(&rows, "status");
    assert!(rows[1..].iter().any(|r| r[status] == "fail"));
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = "scenario = whitney-sphere\n[grid]\nsize = 32\n";
    run(a.path(), &["invariants"], cfg);
    run(b.path(), &["invariants"], cfg);
    let read = |d: &Path| std::fs::read(d.join("out/invariants.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

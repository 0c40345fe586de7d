//! The `garnier-lab` binary: verbs, outputs and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use garnier_lab::scenario::{GeneratedOutput, RunReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_garnier-lab"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn verify_all_prints_twelve_passing_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let o = run(&["verify-all", "--out", out.to_str().unwrap(), "--csv"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    let lines: Vec<_> = stdout.lines().filter(|l| l.starts_with("criterion")).collect();
    assert_eq!(lines.len(), 12);
    assert!(lines.iter().all(|l| l.ends_with("PASS")));
    let json = std::fs::read_to_string(out.join("bpz.json")).unwrap();
    let report: RunReport = serde_json::from_str(&json).unwrap();
    assert!(report.passed && !report.checks.is_empty());
    assert!(out.join("quantize-pg.csv").exists());
}

#[test]
fn run_by_criterion_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c9.json");
    let o = run(&["run", "--criterion", "9", "--out", out.to_str().unwrap(), "--csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: RunReport = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(report.verdicts.iter().any(|v| v.criterion == 9));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("re_x,im_x,re_y,im_y,equation_id"));
    assert!(csv.lines().any(|l| l.contains("quantized_pg_t1")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.json"), dir.path().join("b.json")];
    for p in &paths {
        let cfg = fixture("bpz_small.json");
        assert_eq!(code(&run(&["run", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()])), 0);
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn loose_integration_fails_the_check() {
    let o = run(&["run", "--criterion", "1", "--rtol", "1e-5"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[FAIL] criterion  1"));
}

#[test]
fn config_errors_exit_with_two() {
    for f in ["fuchs_violation.json", "unknown_field.json"] {
        let o = run(&["run", "--config", fixture(f).to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{f}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&run(&["run", "--criterion", "12"])), 2);
    assert_eq!(code(&run(&["run", "--criterion", "1", "--fd-step", "-1"])), 2);
    let o = run(&["run", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failure_exits_with_three() {
    let o = run(&["run", "--config", fixture("degenerate_bridge.json").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("condition (iii)"));
}

#[test]
fn gen_is_seeded() {
    let a = run(&["gen", "--kind", "schlesinger-b", "--seed", "4"]);
    let b = run(&["gen", "--kind", "schlesinger-b", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let g: GeneratedOutput = serde_json::from_slice(&a.stdout).unwrap();
    assert!(matches!(g, GeneratedOutput::SchlesingerB { seed: 4, .. }));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pg.json");
    let cfg = fixture("pvi_explicit.json");
    let o = run(&["gen", "--kind", "pg", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    // The pvi exponents leave tht2 to the reduction, which `gen --kind pg` does not assume.
    assert_eq!(code(&o), 2);
    let o = run(&["gen", "--kind", "pg", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let g: GeneratedOutput = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(matches!(g, GeneratedOutput::Pg { seed: 1, .. }));
}

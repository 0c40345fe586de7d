//! Scenario files run end to end through the library.

use std::path::Path;

use garnier_lab::numerics::Cx;
use garnier_lab::scenario::{determinism_check, run_scenario, Mode, ScenarioConfig};
use garnier_lab::LabError;

fn load(name: &str) -> Result<ScenarioConfig, LabError> {
    ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name))
}

#[test]
fn small_bpz_scenario_passes() {
    let cfg = load("bpz_small.json").unwrap();
    assert_eq!(cfg.mode, Mode::Bpz);
    let r = run_scenario(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.verdicts);
    // Two frames with twelve points each, four equations per frame.
    let bpz_x: usize = r.checks.iter().filter(|c| c.equation_id == "bpz_x").map(|c| c.sample_points.len()).sum();
    assert_eq!(bpz_x, 24);
    assert_eq!(determinism_check(&cfg).unwrap().measured, 0.0);
}

#[test]
fn explicit_pvi_state_passes() {
    let cfg = load("pvi_explicit.json").unwrap();
    let r = run_scenario(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.verdicts);
    assert_eq!(r.criterion_passed(10), Some(true));
}

#[test]
fn every_mode_runs_with_a_non_default_seed() {
    for m in Mode::ALL {
        let mut cfg = ScenarioConfig::new(m, 1234);
        cfg.samples = Some(garnier_lab::scenario::Samples { states: 2, points: 6 });
        let r = run_scenario(&cfg).unwrap_or_else(|e| panic!("{}: {e}", m.name()));
        assert!(r.passed, "{}: {:?}", m.name(), r.verdicts);
        for id in m.criteria() {
            assert_eq!(r.criterion_passed(*id), Some(true), "{} criterion {id}", m.name());
        }
    }
}

#[test]
fn rejected_configs_name_the_field() {
    let e = load("fuchs_violation.json").and_then(|c| run_scenario(&c)).unwrap_err();
    assert!(e.is_config(), "{e}");
    let e = load("unknown_field.json").unwrap_err();
    assert!(e.to_string().contains("tolerence"), "{e}");

    let mut cfg = ScenarioConfig::new(Mode::Schlesinger, 0);
    cfg.tolerances.fd_order = 3;
    assert!(run_scenario(&cfg).unwrap_err().to_string().contains("fd_order"));
    let mut cfg = ScenarioConfig::new(Mode::Bpz, 0);
    cfg.initial.t1 = Some(Cx::new(1.0, 0.0));
    assert!(run_scenario(&cfg).unwrap_err().is_config());
}

#[test]
fn singular_state_is_a_numerical_error() {
    let e = load("degenerate_bridge.json").and_then(|c| run_scenario(&c)).unwrap_err();
    assert!(!e.is_config());
    assert!(matches!(e.root(), LabError::ConditionIIIViolated { .. }));
}

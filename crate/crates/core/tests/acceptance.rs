//! The twelve acceptance criteria at their stated tolerances, one line each.
//! Runs without the test harness so the lines always reach the output.

use std::time::Instant;

use garnier_lab::scenario::{verify_all, Mode, Verdict, SUPPLEMENTARY};

const NAMES: [&str; 12] = [
    "Schlesinger conservation",
    "zero-curvature transport",
    "Garnier-Okamoto cross-picture",
    "Hamilton-equation identity",
    "linearization",
    "bridge coherence",
    "BPZ verification",
    "quantized Garnier-Okamoto",
    "quantized polynomial Garnier",
    "Painleve VI reduction",
    "tau consistency",
    "determinism",
];

fn line(id: u8, worst: Option<&Verdict>, passed: bool) -> String {
    let name = NAMES[id as usize - 1];
    let mark = if passed { "PASS" } else { "FAIL" };
    match worst {
        Some(v) => format!(
            "[{mark}] {id:>2} {name:<30} worst {:<36} {:.3e} <= {:.0e}",
            v.check, v.measured, v.threshold
        ),
        None => format!("[{mark}] {id:>2} {name:<30} no verdict recorded"),
    }
}

fn main() {
    let start = Instant::now();
    let all = verify_all(0).expect("every scenario runs to completion");
    let mut failed = Vec::new();
    for id in 1..=12u8 {
        let worst = if id == 12 {
            Some(&all.determinism)
        } else {
            all.runs.iter().find_map(|r| r.worst(id))
        };
        let passed = all.criterion_passed(id).unwrap_or(false);
        println!("{}", line(id, worst, passed));
        if !passed {
            failed.push(id);
        }
    }
    for r in &all.runs {
        for v in r.verdicts.iter().filter(|v| v.criterion == SUPPLEMENTARY && !v.passed) {
            println!("[FAIL]    supplementary {} {:.3e} > {:.0e}", v.check, v.measured, v.threshold);
            failed.push(SUPPLEMENTARY);
        }
    }
    for r in &all.runs {
        let wall: f64 = r.timings.iter().map(|t| t.wall.as_secs_f64()).sum();
        println!("       {:<14} {wall:.2} s", r.config.mode.name());
        assert!(wall < 60.0, "{} took {wall:.1} s", r.config.mode.name());
    }
    println!("       total          {:.2} s", start.elapsed().as_secs_f64());
    assert_eq!(all.runs.len(), Mode::ALL.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(all.passed());
}

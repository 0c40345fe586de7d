//! Run one scenario from a config (or a mode name) and print its verdicts and
//! the JSON report.
//!
//! cargo run --release --example scenario_report -- quantize-pg
//! cargo run --release --example scenario_report -- path/to/scenario.json

use garnier_lab::scenario::{run_scenario, Mode, ScenarioConfig};
use garnier_lab::LabError;

fn main() -> garnier_lab::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "quantize-pg".into());
    let cfg = match Mode::ALL.iter().find(|m| m.name() == arg) {
        Some(m) => ScenarioConfig::new(*m, 0),
        None if std::path::Path::new(&arg).exists() => ScenarioConfig::load(std::path::Path::new(&arg))?,
        None => return Err(LabError::ConfigInvalid(format!("unknown mode or file: {arg}"))),
    };
    let report = run_scenario(&cfg)?;
    for v in &report.verdicts {
        let mark = if v.passed { "ok  " } else { "FAIL" };
        eprintln!("{mark} [{:>2}] {:<40} {:.3e} <= {:.0e}", v.criterion, v.check, v.measured, v.threshold);
    }
    println!("{}", report.to_json()?);
    Ok(())
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use garnier_lab::scenario::{
    gen_state, run_scenario, verify_all, Mode, RunReport, ScenarioConfig, StateKind, ThetaBlock,
};
use garnier_lab::LabError;

#[derive(Parser)]
#[command(name = "garnier-lab", version, about = "Schlesinger, Garnier and BPZ numerical checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    SchlesingerB,
    Pg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit seeded initial data as JSON.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Scenario file whose `theta` block is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario.
    Run {
        #[arg(long, conflicts_with = "criterion")]
        config: Option<PathBuf>,
        /// Run the default scenario deciding acceptance criterion N (1-11).
        #[arg(long)]
        criterion: Option<u8>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-point residuals next to the report.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Run every acceptance criterion and print one line per criterion.
    VerifyAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for one JSON report per mode.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

fn exit_code(e: &LabError) -> u8 {
    if e.is_config() {
        2
    } else {
        3
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), LabError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn write_csv(report: &RunReport, path: &Path) -> Result<(), LabError> {
    report.write_csv(BufWriter::new(File::create(path)?))
}

fn log_timings(report: &RunReport) {
    for t in &report.timings {
        eprintln!("{}: {:.3} s", t.stage, t.wall.as_secs_f64());
    }
}

fn gen(kind: Kind, config: Option<PathBuf>, seed: u64, out: Option<PathBuf>) -> Result<u8, LabError> {
    let theta = config.map(|p| ScenarioConfig::load(&p)).transpose()?.and_then(|c| c.theta);
    let (go, pg) = match theta {
        Some(ThetaBlock::Go(t)) => (Some(t), None),
        Some(ThetaBlock::Pg(t)) => (None, Some(t)),
        None => (None, None),
    };
    let kind = match kind {
        Kind::SchlesingerB => StateKind::SchlesingerB,
        Kind::Pg => StateKind::Pg,
    };
    let state = gen_state(kind, go, pg, seed)?;
    write_to(out.as_deref(), &serde_json::to_string_pretty(&state)?)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: Option<PathBuf>,
    criterion: Option<u8>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    csv: bool,
    rtol: Option<f64>,
    fd_step: Option<f64>,
) -> Result<u8, LabError> {
    let mut cfg = match (config, criterion) {
        (Some(p), _) => ScenarioConfig::load(&p)?,
        (None, Some(id)) => {
            let mode = Mode::for_criterion(id).ok_or_else(|| {
                LabError::ConfigInvalid(format!("--criterion: no single-run scenario for {id}; use verify-all"))
            })?;
            ScenarioConfig::new(mode, 0)
        }
        (None, None) => return Err(LabError::ConfigInvalid("one of --config or --criterion is required".into())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = rtol {
        cfg.tolerances.rtol = r;
    }
    if let Some(h) = fd_step {
        cfg.tolerances.fd_step = h;
    }
    let out = out.or_else(|| cfg.output.clone());
    if csv && out.is_none() {
        return Err(LabError::ConfigInvalid("--csv needs --out or an `output` field".into()));
    }
    let report = run_scenario(&cfg)?;
    log_timings(&report);
    write_to(out.as_deref(), &report.to_json()?)?;
    if csv {
        write_csv(&report, &out.expect("checked above").with_extension("csv"))?;
    }
    for v in &report.verdicts {
        eprintln!(
            "[{}] criterion {:>2} {}: {:.3e} (threshold {:.0e})",
            if v.passed { "PASS" } else { "FAIL" },
            v.criterion,
            v.check,
            v.measured,
            v.threshold
        );
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn verify(seed: u64, out: Option<PathBuf>, csv: bool) -> Result<u8, LabError> {
    let all = verify_all(seed)?;
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
        for r in &all.runs {
            let base = dir.join(r.config.mode.name());
            std::fs::write(base.with_extension("json"), r.to_json()?)?;
            if csv {
                write_csv(r, &base.with_extension("csv"))?;
            }
        }
    }
    for r in &all.runs {
        log_timings(r);
    }
    for id in 1..=12u8 {
        let passed = all.criterion_passed(id).unwrap_or(false);
        println!("criterion {id:>2}: {}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(if all.passed() { 0 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Gen { kind, config, seed, out } => gen(kind, config, seed, out),
        Cmd::Run {
            config,
            criterion,
            seed,
            out,
            csv,
            rtol,
            fd_step,
        } => run(config, criterion, seed, out, csv, rtol, fd_step),
        Cmd::VerifyAll { seed, out, csv } => verify(seed, out, csv),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

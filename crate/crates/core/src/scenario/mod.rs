//! Scenario configuration, the pipelines behind each mode, and run reports.

mod checks;
mod config;
mod report;
mod run;

pub use checks::SUPPLEMENTARY;
pub use config::{
    default_go_theta, default_pg_theta, GoTheta, InitialBlock, Mode, PathsBlock, PgTheta, Samples, ScenarioConfig,
    ThetaBlock, Tolerances, CONFIG_VERSION,
};
pub use report::{DriftRow, RunReport, StageTiming, Verdict};
pub use run::{
    determinism_check, gen_state, run_scenario, verify_all, GeneratedOutput, StateKind, VerifyAll, DETERMINISM_SEED,
};

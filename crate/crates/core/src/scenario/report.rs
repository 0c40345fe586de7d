use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::quantization::{write_residual_csv, ResidualReport};
use crate::schlesinger::InvariantDrift;

/// One measured quantity compared against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: u8,
    pub check: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    /// Passes when `measured ≤ threshold`; NaN never passes.
    pub fn at_most(criterion: u8, check: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict {
            criterion,
            check: check.into(),
            measured,
            threshold,
            passed: measured <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub label: String,
    pub drift: InvariantDrift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTiming {
    pub stage: String,
    pub wall: Duration,
}

/// Everything a run measured. Wall-clock timings are kept out of the
/// serialized form so that equal inputs give equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub checks: Vec<ResidualReport>,
    pub drift: Vec<DriftRow>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    pub fn new(config: ScenarioConfig) -> Self {
        RunReport {
            config,
            checks: Vec::new(),
            drift: Vec::new(),
            verdicts: Vec::new(),
            passed: true,
            timings: Vec::new(),
        }
    }

    pub fn push(&mut self, v: Verdict) {
        self.passed &= v.passed;
        self.verdicts.push(v);
    }

    /// `None` when the run recorded nothing for `criterion`.
    pub fn criterion_passed(&self, criterion: u8) -> Option<bool> {
        let mut it = self.verdicts.iter().filter(|v| v.criterion == criterion).peekable();
        it.peek()?;
        Some(it.all(|v| v.passed))
    }

    /// The verdict of `criterion` with the smallest margin
    /// `threshold / measured`.
    pub fn worst(&self, criterion: u8) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .filter(|v| v.criterion == criterion)
            .max_by(|a, b| {
                let r = |v: &Verdict| if v.measured.is_nan() { f64::INFINITY } else { v.measured / v.threshold };
                r(a).total_cmp(&r(b))
            })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_residual_csv(&self.checks, out)
    }
}

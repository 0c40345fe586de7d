use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{Cx, FdScheme, Mat2, OdeOptions};
use crate::poly_garnier::ThetaPG;
use crate::quantization::FdPlan;
use crate::schlesinger::ThetaGO;

/// Value of the `"spec"` field this build understands.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Schlesinger,
    GarnierGo,
    GarnierPoly,
    Bridge,
    Bpz,
    QuantizeGo,
    QuantizePg,
    Pvi,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Schlesinger,
        Mode::GarnierGo,
        Mode::GarnierPoly,
        Mode::Bridge,
        Mode::Bpz,
        Mode::QuantizeGo,
        Mode::QuantizePg,
        Mode::Pvi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Schlesinger => "schlesinger",
            Mode::GarnierGo => "garnier-go",
            Mode::GarnierPoly => "garnier-poly",
            Mode::Bridge => "bridge",
            Mode::Bpz => "bpz",
            Mode::QuantizeGo => "quantize-go",
            Mode::QuantizePg => "quantize-pg",
            Mode::Pvi => "pvi",
        }
    }

    /// Modes whose exponents are given in the polynomial naming.
    pub fn uses_pg_theta(self) -> bool {
        matches!(self, Mode::GarnierPoly | Mode::Bridge | Mode::Pvi)
    }

    /// Acceptance criteria decided by a run of this mode.
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Mode::Schlesinger => &[1, 11],
            Mode::GarnierGo => &[3],
            Mode::GarnierPoly => &[4, 5],
            Mode::Bridge => &[6],
            Mode::Bpz => &[2, 7],
            Mode::QuantizeGo => &[8],
            Mode::QuantizePg => &[9],
            Mode::Pvi => &[10],
        }
    }

    /// The mode deciding criterion `id`; criterion 12 compares repeated runs
    /// and has no mode of its own.
    pub fn for_criterion(id: u8) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.criteria().contains(&id))
    }
}

/// Exponents at the poles `t1, t2, 1, 0` and at infinity. Without
/// `theta_inf`, seeded states take whatever value their random residues imply.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoTheta {
    pub theta: [Cx; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_inf: Option<Cx>,
}

/// Exponents of the polynomial system. A missing `tht2` is filled in from
/// the reduction condition (PVI mode only); a missing `thinf1` from the
/// Fuchs relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgTheta {
    pub th0: Cx,
    pub th1: Cx,
    pub tht1: Cx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tht2: Option<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinf1: Option<Cx>,
    pub thinf2: Cx,
}

impl PgTheta {
    pub fn resolve(&self) -> Result<ThetaPG> {
        let t = match self.tht2 {
            Some(tht2) => ThetaPG::from_free(self.th0, self.th1, self.tht1, tht2, self.thinf2),
            None => ThetaPG::on_reduction(self.th0, self.th1, self.tht1, self.thinf2),
        };
        match self.thinf1 {
            None => Ok(t),
            Some(thinf1) => {
                let t = ThetaPG { thinf1, ..t };
                t.check_fuchs()?;
                Ok(t)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaBlock {
    Go(GoTheta),
    Pg(PgTheta),
}

/// Explicit initial data. Absent fields are drawn from the seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<Cx>,
    /// B-normalized residues at `t1, t2, 1, 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<[Mat2; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<[Cx; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<[Cx; 2]>,
}

/// Waypoints. Time paths must start at the initial times; `omega` paths at
/// the initial `ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<[Cx; 2]>>,
    /// Base point followed by the cached `x` samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Cx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<Cx>>,
    #[serde(default = "default_exclusion")]
    pub exclusion_radius: f64,
}

fn default_exclusion() -> f64 {
    0.05
}

impl Default for PathsBlock {
    fn default() -> Self {
        PathsBlock {
            t: None,
            x: None,
            omega: None,
            exclusion_radius: default_exclusion(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub fd_order: u8,
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            fd_order: 4,
            fd_step: FdScheme::default().step,
        }
    }
}

impl Tolerances {
    pub fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..OdeOptions::default()
        }
    }

    /// First derivatives use `fd_step`; second derivatives keep the default
    /// step ratio to it.
    pub fn fd_plan(&self) -> Result<FdPlan> {
        let d = FdPlan::default();
        let ratio = d.second.step / d.first.step;
        let plan = FdPlan {
            first: FdScheme::new(self.fd_order, self.fd_step, true)?,
            second: FdScheme::new(self.fd_order, self.fd_step * ratio, true)?,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// How many seeded states (or frames) and sample points a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    pub states: usize,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub spec: u32,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaBlock>,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub paths: PathsBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Samples>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

pub fn default_go_theta() -> GoTheta {
    GoTheta {
        theta: [
            Cx::new(0.3, 0.14),
            Cx::new(-0.4, 0.33),
            Cx::new(0.17, -0.2),
            Cx::new(0.29, 0.11),
        ],
        theta_inf: None,
    }
}

pub fn default_pg_theta(mode: Mode) -> PgTheta {
    PgTheta {
        th0: Cx::new(0.3, 0.0),
        th1: Cx::new(-0.2, 0.33),
        tht1: Cx::new(0.29, 0.0),
        tht2: (mode != Mode::Pvi).then(|| Cx::new(-0.11, 0.2)),
        thinf1: None,
        thinf2: Cx::new(0.25, -0.17),
    }
}

impl ScenarioConfig {
    /// The configuration used for the acceptance run of `mode`.
    pub fn new(mode: Mode, seed: u64) -> Self {
        ScenarioConfig {
            spec: CONFIG_VERSION,
            mode,
            theta: None,
            initial: InitialBlock::default(),
            paths: PathsBlock::default(),
            tolerances: Tolerances::default(),
            samples: None,
            seed,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| LabError::ConfigInvalid(format!("malformed configuration: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn samples(&self) -> Samples {
        self.samples.unwrap_or(match self.mode {
            Mode::Schlesinger => Samples { states: 20, points: 0 },
            Mode::GarnierGo => Samples { states: 5, points: 4 },
            Mode::GarnierPoly => Samples { states: 200, points: 4 },
            Mode::Bridge => Samples { states: 20, points: 0 },
            Mode::Bpz | Mode::QuantizeGo => Samples { states: 5, points: 50 },
            Mode::QuantizePg => Samples { states: 5, points: 20 },
            Mode::Pvi => Samples { states: 3, points: 5 },
        })
    }

    pub fn go_theta(&self) -> GoTheta {
        match self.theta {
            Some(ThetaBlock::Go(t)) => t,
            _ => default_go_theta(),
        }
    }

    pub fn go_exponents(&self) -> Option<ThetaGO> {
        let t = self.go_theta();
        t.theta_inf.map(|ti| ThetaGO::new(t.theta, ti))
    }

    pub fn pg_theta(&self) -> Result<ThetaPG> {
        match self.theta {
            Some(ThetaBlock::Pg(t)) => t.resolve(),
            _ => default_pg_theta(self.mode).resolve(),
        }
    }

    /// Field-level checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(LabError::ConfigInvalid(format!("{field}: {msg}")));
        if self.spec != CONFIG_VERSION {
            return bad("spec", &format!("unsupported version {} (expected {CONFIG_VERSION})", self.spec));
        }
        match (&self.theta, self.mode.uses_pg_theta()) {
            (Some(ThetaBlock::Go(_)), true) => return bad("theta", "this mode takes the `pg` exponent block"),
            (Some(ThetaBlock::Pg(_)), false) => return bad("theta", "this mode takes the `go` exponent block"),
            _ => {}
        }
        if let Some(ThetaBlock::Pg(t)) = &self.theta {
            if t.tht2.is_none() && self.mode != Mode::Pvi {
                return bad("theta.pg.tht2", "required outside pvi mode");
            }
        }
        if self.mode.uses_pg_theta() {
            self.pg_theta()?;
            if self.initial.matrices.is_some() {
                return bad("initial.matrices", "residues are not used by this mode");
            }
        } else if self.initial.q.is_some() || self.initial.p.is_some() {
            return bad("initial", "q and p are only used by polynomial modes");
        }
        if self.initial.matrices.is_some() && self.go_theta().theta_inf.is_none() {
            return bad("theta.go.theta_inf", "required with explicit residues");
        }
        for (field, t) in [("initial.t1", self.initial.t1), ("initial.t2", self.initial.t2)] {
            if let Some(t) = t {
                if t.norm() < 1e-8 || (t - 1.0).norm() < 1e-8 {
                    return bad(field, "must differ from 0 and 1");
                }
            }
        }
        if let (Some(a), Some(b)) = (self.initial.t1, self.initial.t2) {
            if (a - b).norm() < 1e-8 {
                return bad("initial.t2", "must differ from t1");
            }
        }
        let tol = &self.tolerances;
        if !(tol.rtol > 0.0 && tol.rtol.is_finite()) {
            return bad("tolerances.rtol", "must be positive");
        }
        if !(tol.atol > 0.0 && tol.atol.is_finite()) {
            return bad("tolerances.atol", "must be positive");
        }
        if tol.fd_order != 2 && tol.fd_order != 4 {
            return bad("tolerances.fd_order", &format!("must be 2 or 4, got {}", tol.fd_order));
        }
        if !(tol.fd_step > 0.0 && tol.fd_step.is_finite()) {
            return bad("tolerances.fd_step", "must be positive");
        }
        tol.fd_plan()
            .map_err(|e| LabError::ConfigInvalid(format!("tolerances: {e}")))?;
        if !(self.paths.exclusion_radius > 0.0) {
            return bad("paths.exclusion_radius", "must be positive");
        }
        if let Some(t) = &self.paths.t {
            if t.len() < 2 {
                return bad("paths.t", "needs at least two waypoints");
            }
        }
        if let Some(x) = &self.paths.x {
            if x.is_empty() {
                return bad("paths.x", "needs a base point");
            }
        }
        if let Some(w) = &self.paths.omega {
            if w.len() < 2 {
                return bad("paths.omega", "needs at least two waypoints");
            }
        }
        let s = self.samples();
        if s.states == 0 {
            return bad("samples.states", "must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_field_errors() {
        let c = ScenarioConfig::new(Mode::Bpz, 42);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"spec\":1") && text.contains("\"mode\":\"bpz\""));
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c);

        let err = ScenarioConfig::from_json(r#"{"spec": 2, "mode": "bpz"}"#).unwrap_err();
        assert!(err.to_string().contains("spec"));
        let err = ScenarioConfig::from_json(r#"{"spec": 1, "mode": "warp"}"#).unwrap_err();
        assert!(err.is_config());
        let err = ScenarioConfig::from_json(
            r#"{"spec": 1, "mode": "pvi", "theta": {"go": {"theta": [[0,0],[0,0],[0,0],[0,0]]}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("theta"));
        let err =
            ScenarioConfig::from_json(r#"{"spec": 1, "mode": "bpz", "tolerances": {"rtol": 1e-12, "atol": 1e-14, "fd_order": 3, "fd_step": 1e-4}}"#)
                .unwrap_err();
        assert!(err.to_string().contains("tolerances"));
    }

    #[test]
    fn fuchs_enforced_for_polynomial_exponents() {
        let text = r#"{"spec": 1, "mode": "garnier-poly", "theta": {"pg": {
            "th0": [0.3, 0], "th1": [0.1, 0], "tht1": [0.2, 0], "tht2": [0.1, 0],
            "thinf1": [0.5, 0], "thinf2": [0.25, 0]}}}"#;
        let err = ScenarioConfig::from_json(text).unwrap_err();
        assert!(matches!(err, LabError::FuchsViolation(_)));
    }

    #[test]
    fn criteria_cover_one_to_eleven() {
        for id in 1..=11 {
            assert!(Mode::for_criterion(id).is_some());
        }
        assert!(Mode::for_criterion(12).is_none());
    }
}

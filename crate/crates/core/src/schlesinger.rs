//! The 2×2 Schlesinger system with four poles `t1, t2, t3 = 1, t4 = 0`.
//!
//! Residues come in two normalizations: traceless `B_i` with `det B_i = −θ_i²/4`,
//! and shifted `Q_i = B_i + (θ_i/2)·I` with eigenvalues `{0, θ_i}`. Commutators
//! are insensitive to the shift, so the flow is the same in both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{
    ode_integrate, quad_roots, re, Cx, Locus, Mat2, OdeOptions, OdeStats, TPath,
};

/// Smallest admissible distance between two poles.
pub const TIME_COLLISION_TOL: f64 = 1e-12;

/// Local exponents at the four finite poles and at infinity, with every
/// derived constant used downstream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ThetaGORepr", into = "ThetaGORepr")]
pub struct ThetaGO {
    pub theta: [Cx; 4],
    pub theta_inf: Cx,
    pub k_inf: Cx,
    pub delta: [Cx; 4],
    pub delta_inf: Cx,
    pub kappa: Cx,
    pub chi: Cx,
    pub bpz_lambda: Cx,
}

impl ThetaGO {
    /// Exponents with a diagonalizable residue at infinity, `Δ∞ = k∞²/4`.
    pub fn new(theta: [Cx; 4], theta_inf: Cx) -> Self {
        let k_inf = theta_inf - 1.0;
        Self::with_delta_inf(theta, theta_inf, k_inf * k_inf / 4.0)
    }

    /// Exponents with an explicitly supplied `Δ∞` (0 for a Jordan block at infinity).
    pub fn with_delta_inf(theta: [Cx; 4], theta_inf: Cx, delta_inf: Cx) -> Self {
        let sum: Cx = theta.iter().sum();
        let k_inf = theta_inf - 1.0;
        let one_plus = re(1.0) + sum / 2.0;
        ThetaGO {
            theta,
            theta_inf,
            k_inf,
            delta: theta.map(|t| t * t / 4.0),
            delta_inf,
            kappa: ((sum - 1.0) * (sum - 1.0) - theta_inf * theta_inf) / 4.0,
            chi: -(sum + theta_inf - 1.0) / 2.0,
            bpz_lambda: delta_inf - one_plus * one_plus,
        }
    }

    pub fn theta_sum(&self) -> Cx {
        self.theta.iter().sum()
    }

    /// Warns when any exponent is an integer (sufficient genericity condition).
    pub fn warn_if_integer(&self) {
        for (i, t) in self.theta.iter().chain(std::iter::once(&self.theta_inf)).enumerate() {
            if t.im.abs() < 1e-12 && (t.re - t.re.round()).abs() < 1e-12 {
                log::warn!("exponent #{} = {} is an integer; genericity not guaranteed", i + 1, t);
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ThetaGORepr {
    theta1: Cx,
    theta2: Cx,
    theta3: Cx,
    theta4: Cx,
    theta_inf: Cx,
    #[serde(default)]
    k_inf: Option<Cx>,
    #[serde(default)]
    delta: Option<[Cx; 4]>,
    #[serde(default)]
    delta_inf: Option<Cx>,
    #[serde(default)]
    kappa: Option<Cx>,
    #[serde(default)]
    chi: Option<Cx>,
    #[serde(default)]
    bpz_lambda: Option<Cx>,
}

impl From<ThetaGORepr> for ThetaGO {
    fn from(r: ThetaGORepr) -> Self {
        let theta = [r.theta1, r.theta2, r.theta3, r.theta4];
        match r.delta_inf {
            Some(d) => ThetaGO::with_delta_inf(theta, r.theta_inf, d),
            None => ThetaGO::new(theta, r.theta_inf),
        }
    }
}

impl From<ThetaGO> for ThetaGORepr {
    fn from(t: ThetaGO) -> Self {
        ThetaGORepr {
            theta1: t.theta[0],
            theta2: t.theta[1],
            theta3: t.theta[2],
            theta4: t.theta[3],
            theta_inf: t.theta_inf,
            k_inf: Some(t.k_inf),
            delta: Some(t.delta),
            delta_inf: Some(t.delta_inf),
            kappa: Some(t.kappa),
            chi: Some(t.chi),
            bpz_lambda: Some(t.bpz_lambda),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    B,
    Q,
}

impl Normalization {
    fn name(self) -> &'static str {
        match self {
            Normalization::B => "B",
            Normalization::Q => "Q",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    BtoQ,
    QtoB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchlesingerState {
    pub t1: Cx,
    pub t2: Cx,
    #[serde(rename = "matrices")]
    pub mats: [Mat2; 4],
    pub norm: Normalization,
    pub theta: ThetaGO,
}

/// `[t1, t2, 1, 0]`.
pub fn pole_positions(t1: Cx, t2: Cx) -> [Cx; 4] {
    [t1, t2, re(1.0), re(0.0)]
}

pub fn check_times(times: &[Cx; 4]) -> Result<()> {
    for i in 0..4 {
        for j in i + 1..4 {
            if (times[i] - times[j]).norm() < TIME_COLLISION_TOL {
                return Err(LabError::TimeCollision(format!(
                    "t{} = t{} = {}",
                    i + 1,
                    j + 1,
                    times[i]
                )));
            }
        }
    }
    Ok(())
}

/// `∂A_j/∂t_i` for all `i, j`, with all four poles free. Entry `[i][j]`.
pub fn schlesinger_rhs4(mats: &[Mat2; 4], times: &[Cx; 4]) -> Result<[[Mat2; 4]; 4]> {
    check_times(times)?;
    let mut out = [[Mat2::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if j != i {
                out[i][j] = mats[i].commutator(&mats[j]) * (re(1.0) / (times[i] - times[j]));
            }
        }
        // Diagonal term: minus the sum of the others, so the total vanishes.
        out[i][i] = -out[i].iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| *m).sum::<Mat2>();
    }
    Ok(out)
}

/// `(ln τ)_{t_i} = Σ_{j≠i} tr(A_j A_i)/(t_i − t_j)` for all four poles (traceless residues).
pub fn tau_logderiv4(mats: &[Mat2; 4], times: &[Cx; 4]) -> Result<[Cx; 4]> {
    check_times(times)?;
    let mut out = [Cx::default(); 4];
    for i in 0..4 {
        for j in 0..4 {
            if j != i {
                out[i] += (mats[j] * mats[i]).trace() / (times[i] - times[j]);
            }
        }
    }
    Ok(out)
}

/// `Σ A_i/(x − t_i)`.
pub fn connection_at(mats: &[Mat2; 4], times: &[Cx; 4], x: Cx) -> Result<Mat2> {
    let mut a = Mat2::zero();
    for (m, t) in mats.iter().zip(times) {
        let d = x - t;
        if d.norm() <= 1e-14 * (1.0 + x.norm()) {
            return Err(LabError::PoleEvaluation(format!("x = {x} coincides with pole {t}")));
        }
        a += *m * (re(1.0) / d);
    }
    Ok(a)
}

impl SchlesingerState {
    pub fn new(t1: Cx, t2: Cx, mats: [Mat2; 4], norm: Normalization, theta: ThetaGO) -> Result<Self> {
        let s = SchlesingerState {
            t1,
            t2,
            mats,
            norm,
            theta,
        };
        check_times(&s.times())?;
        Ok(s)
    }

    pub fn times(&self) -> [Cx; 4] {
        pole_positions(self.t1, self.t2)
    }

    /// `A_∞ = Σ A_i`.
    pub fn a_inf(&self) -> Mat2 {
        self.mats.iter().copied().sum()
    }

    pub fn require(&self, norm: Normalization) -> Result<()> {
        if self.norm != norm {
            return Err(LabError::NormalizationMismatch {
                expected: norm.name(),
                found: self.norm.name(),
            });
        }
        Ok(())
    }

    /// Largest violation of the trace and determinant constraints of the
    /// current normalization.
    pub fn constraint_defect(&self) -> f64 {
        self.mats
            .iter()
            .zip(self.theta.theta)
            .map(|(m, th)| {
                let (tr, det) = match self.norm {
                    Normalization::B => (re(0.0), -th * th / 4.0),
                    Normalization::Q => (th, re(0.0)),
                };
                (m.trace() - tr).norm().max((m.det() - det).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        check_times(&self.times())?;
        let d = self.constraint_defect();
        if !(d <= tol) {
            return Err(LabError::InvariantViolated(format!(
                "{}-normalized residues violate trace/determinant constraints by {d:e}",
                self.norm.name()
            )));
        }
        if !self.mats.iter().all(Mat2::is_finite) {
            return Err(LabError::InvariantViolated("non-finite residue".into()));
        }
        Ok(())
    }

    /// Returns the state in the requested normalization.
    pub fn normalized(&self, norm: Normalization) -> SchlesingerState {
        if self.norm == norm {
            return self.clone();
        }
        let dir = match norm {
            Normalization::Q => ShiftDirection::BtoQ,
            Normalization::B => ShiftDirection::QtoB,
        };
        shift_normalization(self, dir).expect("direction matches source")
    }

    pub fn with_times(&self, t1: Cx, t2: Cx, mats: [Mat2; 4]) -> Self {
        SchlesingerState {
            t1,
            t2,
            mats,
            norm: self.norm,
            theta: self.theta,
        }
    }

    fn pack(&self) -> Vec<Cx> {
        let mut v = vec![Cx::default(); 16];
        for (k, m) in self.mats.iter().enumerate() {
            m.write_to(&mut v[4 * k..]);
        }
        v
    }

    fn unpack(v: &[Cx]) -> [Mat2; 4] {
        std::array::from_fn(|k| Mat2::read_from(&v[4 * k..]))
    }
}

/// `∂A_j/∂t1` and `∂A_j/∂t2`.
pub fn schlesinger_rhs(s: &SchlesingerState) -> Result<([Mat2; 4], [Mat2; 4])> {
    let d = schlesinger_rhs4(&s.mats, &s.times())?;
    Ok((d[0], d[1]))
}

pub fn shift_normalization(s: &SchlesingerState, dir: ShiftDirection) -> Result<SchlesingerState> {
    let (from, to, sign) = match dir {
        ShiftDirection::BtoQ => (Normalization::B, Normalization::Q, 0.5),
        ShiftDirection::QtoB => (Normalization::Q, Normalization::B, -0.5),
    };
    s.require(from)?;
    let mats = std::array::from_fn(|i| s.mats[i] + Mat2::scalar(s.theta.theta[i] * sign));
    Ok(SchlesingerState {
        norm: to,
        mats,
        ..s.clone()
    })
}

/// `A(x) = Σ A_i/(x − t_i)`.
pub fn connection_matrix(s: &SchlesingerState, x: Cx) -> Result<Mat2> {
    connection_at(&s.mats, &s.times(), x)
}

/// `((ln τ)_{t1}, (ln τ)_{t2})`; requires traceless residues.
pub fn tau_logderiv(s: &SchlesingerState) -> Result<(Cx, Cx)> {
    s.require(Normalization::B)?;
    let d = tau_logderiv4(&s.mats, &s.times())?;
    Ok((d[0], d[1]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchlesingerPoint {
    pub state: SchlesingerState,
    /// `ln τ` relative to the trajectory base point.
    pub ln_tau: Cx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchlesingerTrajectory {
    pub points: Vec<SchlesingerPoint>,
    pub stats: OdeStats,
}

impl SchlesingerTrajectory {
    pub fn end(&self) -> &SchlesingerPoint {
        self.points.last().expect("non-empty trajectory")
    }

    pub fn start(&self) -> &SchlesingerPoint {
        &self.points[0]
    }

    /// Maximal drift of `tr A_i`, `det A_i` and the entries of `A_∞` from the base point.
    pub fn max_drift(&self) -> InvariantDrift {
        let base = &self.start().state;
        let mut d = InvariantDrift::default();
        for p in &self.points {
            for (a, b) in p.state.mats.iter().zip(&base.mats) {
                d.trace = d.trace.max((a.trace() - b.trace()).norm());
                d.det = d.det.max((a.det() - b.det()).norm());
            }
            d.a_inf = d.a_inf.max((p.state.a_inf() - base.a_inf()).max_abs());
        }
        d
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub trace: f64,
    pub det: f64,
    pub a_inf: f64,
}

impl InvariantDrift {
    pub fn max(&self) -> f64 {
        self.trace.max(self.det).max(self.a_inf)
    }
}

/// Integrates the residues (and `ln τ`) along a path in `(t1, t2)`.
///
/// The path must start at the state's times and avoid `t_i ∈ {0, 1}` and
/// `t1 = t2` by its exclusion radius.
pub fn integrate_schlesinger(
    s0: &SchlesingerState,
    path: &TPath,
    opts: &OdeOptions,
) -> Result<SchlesingerTrajectory> {
    path.validate(&Locus::time_singularities())?;
    let start = path.start();
    if (start[0] - s0.t1).norm() > 1e-14 || (start[1] - s0.t2).norm() > 1e-14 {
        return Err(LabError::ConfigInvalid(
            "path does not start at the state's times".into(),
        ));
    }
    // τ is defined through traceless residues: tr(Q_jQ_i) = tr(B_jB_i) + θ_iθ_j/2.
    let theta = s0.theta.theta;
    let shift = s0.norm == Normalization::Q;
    let mut y0 = s0.pack();
    y0.push(Cx::default());
    let tr = ode_integrate(
        |t: &[Cx; 2], dt: &[Cx; 2], y: &[Cx], dy: &mut [Cx]| {
            let mats = SchlesingerState::unpack(y);
            let times = pole_positions(t[0], t[1]);
            let d = schlesinger_rhs4(&mats, &times)?;
            let mut tau = tau_logderiv4(&mats, &times)?;
            if shift {
                for i in 0..2 {
                    for j in 0..4 {
                        if j != i {
                            tau[i] -= theta[i] * theta[j] / 2.0 / (times[i] - times[j]);
                        }
                    }
                }
            }
            for j in 0..4 {
                (d[0][j] * dt[0] + d[1][j] * dt[1]).write_to(&mut dy[4 * j..]);
            }
            dy[16] = tau[0] * dt[0] + tau[1] * dt[1];
            Ok(())
        },
        &y0,
        path,
        opts,
    )?;
    let points = tr
        .points
        .iter()
        .map(|p| SchlesingerPoint {
            state: s0.with_times(p.at[0], p.at[1], SchlesingerState::unpack(&p.state)),
            ln_tau: p.state[16],
        })
        .collect();
    Ok(SchlesingerTrajectory {
        points,
        stats: tr.stats,
    })
}

/// Options for random initial data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    pub t1: Cx,
    pub t2: Cx,
    /// When set, the residue at infinity is `diag(k∞/2, −k∞/2)` with
    /// `k∞ = θ∞ − 1` by construction; otherwise it is whatever the random
    /// residues sum to, diagonalized by a global conjugation.
    pub theta_inf: Option<Cx>,
    /// Scale of the random entries.
    pub scale: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            t1: Cx::new(0.35, 0.45),
            t2: Cx::new(-0.4, 0.3),
            theta_inf: None,
            scale: 1.0,
        }
    }
}

/// A generated state together with the conjugation `G` that brought `A_∞`
/// to diagonal form (`B_i = G⁻¹ B_i^{raw} G`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedState {
    pub state: SchlesingerState,
    pub conjugation: Mat2,
}

fn random_cx(rng: &mut ChaCha8Rng, scale: f64) -> Cx {
    Cx::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

/// Random traceless matrix with `det = −θ²/4`.
fn random_traceless(rng: &mut ChaCha8Rng, theta: Cx, scale: f64) -> Mat2 {
    loop {
        let b = random_cx(rng, scale);
        let r12 = random_cx(rng, scale);
        if r12.norm() < 0.1 * scale {
            continue;
        }
        let r21 = (theta * theta / 4.0 - b * b) / r12;
        return Mat2::new(b, r12, r21, -b);
    }
}

/// Seeded random B-normalized state with diagonal `A_∞`.
pub fn generate_b_state(theta: [Cx; 4], opts: &GenOptions, seed: u64) -> Result<GeneratedState> {
    check_times(&pole_positions(opts.t1, opts.t2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match opts.theta_inf {
        None => generate_free(&mut rng, theta, opts),
        Some(theta_inf) => generate_prescribed(&mut rng, theta, theta_inf, opts),
    }
}

fn generate_free(rng: &mut ChaCha8Rng, theta: [Cx; 4], opts: &GenOptions) -> Result<GeneratedState> {
    for _ in 0..100 {
        let raw: [Mat2; 4] = std::array::from_fn(|i| random_traceless(rng, theta[i], opts.scale));
        let binf: Mat2 = raw.iter().copied().sum();
        let (e, _) = binf.eigenvalues();
        if e.norm() < 1e-3 * opts.scale {
            continue;
        }
        // Columns: eigenvectors for +e and −e.
        let v = |lam: Cx| -> [Cx; 2] {
            let m = binf - Mat2::scalar(lam);
            if m.a12.norm() >= m.a21.norm() {
                [m.a12, lam - binf.a11]
            } else {
                [lam - binf.a22, m.a21]
            }
        };
        let (v1, v2) = (v(e), v(-e));
        let g = Mat2::new(v1[0], v2[0], v1[1], v2[1]);
        let Some(ginv) = g.try_inverse(1e-8) else {
            continue;
        };
        let mats = raw.map(|m| ginv * m * g);
        let theta_go = ThetaGO::new(theta, e * 2.0 + 1.0);
        let state = SchlesingerState::new(opts.t1, opts.t2, mats, Normalization::B, theta_go)?;
        return Ok(GeneratedState {
            state,
            conjugation: g,
        });
    }
    Err(LabError::InfeasibleTheta(
        "could not draw residues with a non-degenerate sum".into(),
    ))
}

fn generate_prescribed(
    rng: &mut ChaCha8Rng,
    theta: [Cx; 4],
    theta_inf: Cx,
    opts: &GenOptions,
) -> Result<GeneratedState> {
    let k = theta_inf - 1.0;
    let target = Mat2::diag(k / 2.0, -k / 2.0);
    for _ in 0..100 {
        let b1 = random_traceless(rng, theta[0], opts.scale);
        let b2 = random_traceless(rng, theta[1], opts.scale);
        // B3 + B4 = C, B3 = [[b, r12], [r21, −b]]. Equating the two determinant
        // constraints gives 2·c1·b + c12·r21 = L, which is linear in r21.
        let c = target - b1 - b2;
        let (c1, c12, c21) = (c.a11, c.a12, c.a21);
        if c12.norm() < 1e-3 * opts.scale {
            continue;
        }
        let r12 = random_cx(rng, opts.scale);
        let l = (theta[2] * theta[2] - theta[3] * theta[3]) / 4.0 + c1 * c1 + c12 * c21 - r12 * c21;
        // det B3 = −θ3²/4 becomes c12·b² − 2·c1·r12·b + r12·L − c12·θ3²/4 = 0.
        let Ok((ba, bb)) = quad_roots(c12, -c1 * r12 * 2.0, r12 * l - c12 * theta[2] * theta[2] / 4.0) else {
            continue;
        };
        let b = if ba.norm() <= bb.norm() { ba } else { bb };
        let r21 = (l - c1 * b * 2.0) / c12;
        let b3 = Mat2::new(b, r12, r21, -b);
        let b4 = c - b3;
        let mats = [b1, b2, b3, b4];
        if mats.iter().any(|m| m.max_abs() > 20.0 * opts.scale) {
            continue;
        }
        let theta_go = ThetaGO::new(theta, theta_inf);
        let state = SchlesingerState::new(opts.t1, opts.t2, mats, Normalization::B, theta_go)?;
        if state.constraint_defect() > 1e-12 {
            continue;
        }
        return Ok(GeneratedState {
            state,
            conjugation: Mat2::identity(),
        });
    }
    Err(LabError::InfeasibleTheta(
        "could not realize the prescribed residue at infinity".into(),
    ))
}

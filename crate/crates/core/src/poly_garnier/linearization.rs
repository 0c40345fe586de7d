use serde::{Deserialize, Serialize};

use super::{PGState, ThetaPG};
use crate::error::{LabError, Result};
use crate::numerics::{re, Cx, Mat2};
use crate::schlesinger::{Normalization, SchlesingerState, ThetaGO};

/// Smallest admissible `|θ₁^∞ − θ₂^∞|`.
pub const RESONANCE_TOL: f64 = 1e-10;

/// Residues of the linear system at `x = 0, 1, t1, t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AHat {
    pub a0: Mat2,
    pub a1: Mat2,
    pub at1: Mat2,
    pub at2: Mat2,
}

impl AHat {
    /// In the order `t1, t2, 1, 0` used for Schlesinger states.
    pub fn schlesinger_order(&self) -> [Mat2; 4] {
        [self.at1, self.at2, self.a1, self.a0]
    }

    pub fn sum(&self) -> Mat2 {
        self.a0 + self.a1 + self.at1 + self.at2
    }
}

pub fn ahat_matrices(s: &PGState) -> Result<AHat> {
    s.check()?;
    let th = &s.theta;
    let [q1, q2] = s.q;
    let [p1, p2] = s.p;
    let (t1, t2) = (s.t1, s.t2);
    let sp = p1 * q1 + p2 * q2;
    let a0 = Mat2::new(th.th0, q1 / t1 + q2 / t2 - 1.0, re(0.0), re(0.0));
    let a1 = Mat2::new(
        th.th1 + th.thinf2 - sp,
        re(1.0),
        (sp - th.thinf2) * (th.th1 + th.thinf2 - sp),
        sp - th.thinf2,
    );
    let at = |ti: Cx, qi: Cx, pi: Cx, tht: Cx| {
        Mat2::new(tht + pi * qi, -qi / ti, ti * pi * (tht + pi * qi), -pi * qi)
    };
    Ok(AHat {
        a0,
        a1,
        at1: at(t1, q1, p1, th.tht1),
        at2: at(t2, q2, p2, th.tht2),
    })
}

/// Entry (2,1) of `−ΣÂ_ξ`:
/// `a = (s − θ₂^∞)(s − θ¹ − θ₂^∞) − t1·p1(θ^{t1} + p1q1) − t2·p2(θ^{t2} + p2q2)`,
/// `s = p1q1 + p2q2`.
pub fn elem_a(s: &PGState) -> Cx {
    let th = &s.theta;
    let sp = s.p[0] * s.q[0] + s.p[1] * s.q[1];
    (sp - th.thinf2) * (sp - th.th1 - th.thinf2)
        - s.t1 * s.p[0] * (th.tht1 + s.p[0] * s.q[0])
        - s.t2 * s.p[1] * (th.tht2 + s.p[1] * s.q[1])
}

/// Exponents of the Schlesinger picture: `θ1 = θ^{t1}`, `θ2 = θ^{t2}`,
/// `θ3 = θ¹`, `θ4 = θ⁰`, `θ∞ = θ₂^∞ − θ₁^∞ + 1`.
pub fn theta_go(th: &ThetaPG) -> ThetaGO {
    ThetaGO::new([th.tht1, th.tht2, th.th1, th.th0], th.thinf2 - th.thinf1 + 1.0)
}

/// The gauge `P·diag(1, u)` taking `Â_ξ` to `S_ξ`.
pub fn gauge_matrix(s: &PGState, u: Cx) -> Result<Mat2> {
    let th = &s.theta;
    let gap = th.thinf1 - th.thinf2;
    if gap.norm() < RESONANCE_TOL {
        return Err(LabError::ResonantInfinity(gap));
    }
    if u.norm() == 0.0 || !u.is_finite() {
        return Err(LabError::ZeroGauge);
    }
    let p = Mat2::new(re(1.0), re(0.0), elem_a(s) / gap, re(1.0));
    Ok(p * Mat2::diag(re(1.0), u))
}

/// `S_ξ = diag(1,u)⁻¹ P⁻¹ Â_ξ P diag(1,u)`, relabeled as a Q-normalized
/// Schlesinger state `(Q1, Q2, Q3, Q4) = (S_{t1}, S_{t2}, S_1, S_0)`.
pub fn to_schlesinger(s: &PGState, u: Cx) -> Result<SchlesingerState> {
    let g = gauge_matrix(s, u)?;
    let ginv = g.inverse()?;
    let mats = ahat_matrices(s)?.schlesinger_order().map(|a| ginv * a * g);
    SchlesingerState::new(s.t1, s.t2, mats, Normalization::Q, theta_go(&s.theta))
}

/// Coefficients `[c2, c1, c0]` of the numerator of entry (1,2) of
/// `Σ Â_ξ/(x − t_ξ)` over `x(x − 1)(x − t1)(x − t2)`.
pub fn gaup_numerator(s: &PGState) -> [Cx; 3] {
    let [q1, q2] = s.q;
    let (t1, t2) = (s.t1, s.t2);
    [
        re(1.0) - q1 - q2,
        -t1 - t2 + q2 * (t1 + 1.0) + q1 * (t2 + 1.0),
        t1 * t2 - q1 * t2 - q2 * t1,
    ]
}

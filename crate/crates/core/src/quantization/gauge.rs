use serde::{Deserialize, Serialize};

use super::transport::{gauge_exponent, Carrier, PAIRS};
use crate::error::{LabError, Result};
use crate::numerics::{quad_roots, re, Cx, Mat2};
use crate::poly_garnier::lambda_symmetric;
use crate::schlesinger::ThetaGO;

/// Smallest `|x − y|` at which the diagonal factor may be divided out.
pub const DIAGONAL_EXCLUSION: f64 = 1e-6;

/// The logarithms entering the gauge prefactors at a pair `(x, y)`:
/// `ln(x − t_k)`, `ln(y − t_k)` and `ln(t_i − t_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeLogs {
    pub x: Cx,
    pub y: Cx,
    pub ln_dx: [Cx; 4],
    pub ln_dy: [Cx; 4],
    pub ln_tt: [Cx; 6],
}

impl GaugeLogs {
    /// Principal branches.
    pub fn principal(x: Cx, y: Cx, times: [Cx; 4]) -> Self {
        GaugeLogs {
            x,
            y,
            ln_dx: times.map(|t| (x - t).ln()),
            ln_dy: times.map(|t| (y - t).ln()),
            ln_tt: PAIRS.map(|(i, j)| (times[i] - times[j]).ln()),
        }
    }

    /// Branches carried by probes `i` (for `x`) and `j` (for `y`).
    pub fn from_carrier(c: &Carrier, i: usize, j: usize) -> Self {
        GaugeLogs {
            x: c.probes[i].x,
            y: c.probes[j].x,
            ln_dx: c.probes[i].ln_d,
            ln_dy: c.probes[j].ln_d,
            ln_tt: c.ln_tt,
        }
    }
}

/// `S(t) = Σ_{i<j}(θ_iθ_j/2)·ln(t_i − t_j)` with principal logarithms.
pub fn s_closed_form(times: [Cx; 4], theta: &[Cx; 4]) -> Cx {
    gauge_exponent(theta, &PAIRS.map(|(i, j)| (times[i] - times[j]).ln()))
}

/// `∂S/∂t_i = (θ_i/2)·Σ_{j≠i} θ_j/(t_i − t_j)`.
pub fn s_partial(times: [Cx; 4], theta: &[Cx; 4], i: usize) -> Cx {
    (0..4)
        .filter(|&j| j != i)
        .map(|j| theta[j] / (times[i] - times[j]))
        .sum::<Cx>()
        * theta[i]
        / 2.0
}

/// `ln` of `(x − y)·Π[(x − t_i)(y − t_i)]^{θ_i/2}·e^S`.
pub fn y_gauge_log(theta: &ThetaGO, logs: &GaugeLogs) -> Result<Cx> {
    let d = logs.x - logs.y;
    if d.norm() < DIAGONAL_EXCLUSION {
        return Err(LabError::DiagonalCollision(d.norm()));
    }
    let th = &theta.theta;
    let mut l = d.ln() + gauge_exponent(th, &logs.ln_tt);
    for i in 0..4 {
        l += th[i] / 2.0 * (logs.ln_dx[i] + logs.ln_dy[i]);
    }
    Ok(l)
}

/// `Y = M / ((x − y)·Π[(x − t_i)(y − t_i)]^{θ_i/2}·e^S)`.
///
/// The `(x − y)` factor is single-valued; only the powers use `logs`.
pub fn gauge_to_y(m: Mat2, theta: &ThetaGO, logs: &GaugeLogs) -> Result<Mat2> {
    let d = logs.x - logs.y;
    let l = y_gauge_log(theta, logs)? - d.ln();
    Ok(m * ((-l).exp() / d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AlphaBranch {
    Alpha0,
    AlphaNeg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BetaBranch {
    BetaSmall,
    BetaLarge,
}

/// Exponents of `Y = (xy)^α (x − 1)^β (y − 1)^β V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: Cx,
    pub beta: Cx,
    pub branch_tag: AlphaBranch,
}

impl AlphaBeta {
    /// `λ` implied by `(α, β)`.
    pub fn lambda(&self, theta: &ThetaGO) -> Cx {
        let [t1, t2, t3, t4] = theta.theta;
        let (a, b) = (self.alpha, self.beta);
        a * b * 2.0 + (t3 + 1.0) * a + (t4 + 1.0) * b + b * (b + t3) + (t1 + t2 + 1.0) * (a + b)
    }

    /// `(|α(α + θ₄)|, |λ(α, β) − λ|)`.
    pub fn defects(&self, theta: &ThetaGO) -> (f64, f64) {
        let a = self.alpha;
        (
            (a * (a + theta.theta[3])).norm(),
            (self.lambda(theta) - theta.bpz_lambda).norm(),
        )
    }
}

pub fn solve_alpha_beta(theta: &ThetaGO, alpha: AlphaBranch, beta: BetaBranch) -> Result<AlphaBeta> {
    let [t1, t2, t3, t4] = theta.theta;
    let a = match alpha {
        AlphaBranch::Alpha0 => re(0.0),
        AlphaBranch::AlphaNeg => -t4,
    };
    let lin = t3 + a * 2.0 + t4 + 1.0 + t1 + t2 + 1.0;
    let c0 = (t3 + 1.0) * a + (t1 + t2 + 1.0) * a - theta.bpz_lambda;
    let (r1, r2) = quad_roots(re(1.0), lin, c0)?;
    let (small, large) = if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) };
    Ok(AlphaBeta {
        alpha: a,
        beta: match beta {
            BetaBranch::BetaSmall => small,
            BetaBranch::BetaLarge => large,
        },
        branch_tag: alpha,
    })
}

/// `V = Y / ((xy)^α (x − 1)^β (y − 1)^β)` with `t3 = 1`, `t4 = 0` and the
/// branches of `ln x`, `ln(x − 1)` taken from `logs`.
pub fn v_from_y(y: Mat2, ab: &AlphaBeta, logs: &GaugeLogs) -> Result<Mat2> {
    for z in [logs.x, logs.y] {
        if z.norm() < 1e-14 || (z - 1.0).norm() < 1e-14 {
            return Err(LabError::PoleEvaluation(format!("prefactor singular at {z}")));
        }
    }
    let l = ab.alpha * (logs.ln_dx[3] + logs.ln_dy[3]) + ab.beta * (logs.ln_dx[2] + logs.ln_dy[2]);
    Ok(y * (-l).exp())
}

/// `(ζ, η)` from `(x, y)`.
pub fn zeta_eta_map(x: Cx, y: Cx, t1: Cx, t2: Cx) -> Result<(Cx, Cx)> {
    if (t1 - t2).norm() < 1e-12 {
        return Err(LabError::TimeCollision(format!("t1 = t2 = {t1}")));
    }
    for z in [x, y] {
        if (z - 1.0).norm() < 1e-14 {
            return Err(LabError::PoleEvaluation(format!("point {z} at x = 1")));
        }
    }
    // Symmetric products first, so that swapping x and y is exact.
    let den = (t1 - t2) * ((x - 1.0) * (y - 1.0));
    Ok((
        (re(1.0) - t2) * ((x - t1) * (y - t1)) / den,
        -(re(1.0) - t1) * ((x - t2) * (y - t2)) / den,
    ))
}

/// The ordering of the preimage pair closest to `hint`.
pub fn zeta_eta_inverse(zeta: Cx, eta: Cx, t1: Cx, t2: Cx, hint: (Cx, Cx)) -> Result<(Cx, Cx)> {
    let sep = (hint.0 - hint.1).norm();
    if sep < 1e-10 * (1.0 + hint.0.norm()) {
        return Err(LabError::DegenerateJacobian(format!(
            "hint lies on the diagonal x = y = {}",
            hint.0
        )));
    }
    // Both relations are linear in x + y and xy; this is the same 2×2 system
    // as the classical bridge.
    let (e1, e2) = lambda_symmetric(zeta, eta, t1, t2).map_err(|e| match e {
        LabError::ReductionLocus(d) => LabError::DegenerateJacobian(format!("|1 − ζ − η| = {d:e}")),
        other => other,
    })?;
    let (a, b) = quad_roots(re(1.0), -e1, e2)?;
    let d_ab = (a - hint.0).norm() + (b - hint.1).norm();
    let d_ba = (b - hint.0).norm() + (a - hint.1).norm();
    if (d_ab - d_ba).abs() < 1e-12 {
        return Err(LabError::BranchAmbiguity { zeta, eta });
    }
    Ok(if d_ab < d_ba { (a, b) } else { (b, a) })
}

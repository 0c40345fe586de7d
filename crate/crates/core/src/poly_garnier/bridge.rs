use super::PGState;
use crate::error::{LabError, Result};
use crate::garnier_okamoto::GOState;
use crate::numerics::{quad_roots, re, Cx};

/// Smallest admissible `|1 − q1 − q2|` for the map to `(λ1, λ2)`.
pub const REDUCTION_TOL: f64 = 1e-12;

fn check_distinct_times(t1: Cx, t2: Cx) -> Result<()> {
    if (t1 - t2).norm() < 1e-12 {
        return Err(LabError::TimeCollision(format!("t1 = t2 = {t1}")));
    }
    Ok(())
}

/// `(q1, q2)` from the zeros `λ1, λ2`.
pub fn bridge_q_from_lambda(l1: Cx, l2: Cx, t1: Cx, t2: Cx) -> Result<(Cx, Cx)> {
    check_distinct_times(t1, t2)?;
    for l in [l1, l2] {
        if (l - 1.0).norm() < 1e-14 {
            return Err(LabError::PoleEvaluation(format!("λ = {l} at x = 1")));
        }
    }
    let den = (t1 - t2) * (l1 - 1.0) * (l2 - 1.0);
    let q1 = (re(1.0) - t2) * (l1 - t1) * (l2 - t1) / den;
    let q2 = -(re(1.0) - t1) * (l1 - t2) * (l2 - t2) / den;
    Ok((q1, q2))
}

/// Elementary symmetric functions `(λ1 + λ2, λ1·λ2)` of the zeros.
pub fn lambda_symmetric(q1: Cx, q2: Cx, t1: Cx, t2: Cx) -> Result<(Cx, Cx)> {
    check_distinct_times(t1, t2)?;
    let d = re(1.0) - q1 - q2;
    if d.norm() < REDUCTION_TOL {
        return Err(LabError::ReductionLocus(d.norm()));
    }
    let e1 = (t1 + t2 - (t2 + 1.0) * q1 - (t1 + 1.0) * q2) / d;
    let e2 = (t1 * t2 - t2 * q1 - t1 * q2) / d;
    Ok((e1, e2))
}

/// `(λ1, λ2)`, lexicographically ordered, from `(q1, q2)`.
pub fn bridge_lambda_from_q(q1: Cx, q2: Cx, t1: Cx, t2: Cx) -> Result<(Cx, Cx)> {
    let (e1, e2) = lambda_symmetric(q1, q2, t1, t2)?;
    let (a, b) = quad_roots(re(1.0), -e1, e2)?;
    Ok(if (a.re, a.im) <= (b.re, b.im) { (a, b) } else { (b, a) })
}

/// Residuals `LHS − RHS` of the two relations expressing `p_i + θ^{t_i}/q_i`
/// through `(λ_k, μ_k)`.
pub fn mu_p_relations(s: &PGState, g: &GOState) -> Result<(Cx, Cx)> {
    let th = &s.theta;
    let (t1, t2) = (s.t1, s.t2);
    let [l1, l2] = g.lambda;
    let [m1, m2] = g.mu;
    for q in s.q {
        if q.norm() < 1e-14 {
            return Err(LabError::PoleEvaluation("q_i = 0".into()));
        }
    }
    if (l1 - l2).norm() < 1e-14 || (l1 * l2).norm() < 1e-28 {
        return Err(LabError::PoleEvaluation(format!("degenerate zeros λ = {l1}, {l2}")));
    }
    let pref = (l1 - 1.0) * (l2 - 1.0) / ((t1 - 1.0) * (t2 - 1.0));
    let total = th.tht1 + th.tht2 + th.th1 + th.th0 + th.thinf2;
    let rhs = |tother: Cx| {
        pref * (((l1 - 1.0) * (l1 - tother) * m1 - (l2 - 1.0) * (l2 - tother) * m2) / (l1 - l2) - total
            + th.th0 * tother / (l1 * l2))
    };
    let r1 = s.p[0] + th.tht1 / s.q[0] - rhs(t2);
    let r2 = s.p[1] + th.tht2 / s.q[1] - rhs(t1);
    Ok((r1, r2))
}

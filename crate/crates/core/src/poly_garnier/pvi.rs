//! The reduction `q1 + q2 = 1`, `θ₁^∞ = θ₂^∞ + 1` of the polynomial system to
//! a single Hamiltonian system in `ω = t1(t2 − 1)/(t2 − t1)`.

use serde::{Deserialize, Serialize};

use super::{pg_field, PGState, ThetaPG};
use crate::error::{LabError, Result};
use crate::numerics::{ode_integrate, re, Cx, Locus, OdeOptions, XPath};

/// Tolerance on `|q1 + q2 − 1|` and `|θ₁^∞ − θ₂^∞ − 1|` for a state to count as reduced.
pub const REDUCTION_STATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PVIState {
    pub omega: Cx,
    #[serde(rename = "Q")]
    pub q: Cx,
    #[serde(rename = "P")]
    pub p: Cx,
    #[serde(rename = "theta")]
    pub params: ThetaPG,
}

impl ThetaPG {
    /// Exponents satisfying both the Fuchs relation and `θ₁^∞ = θ₂^∞ + 1`;
    /// `θ^{t2}` is the dependent one.
    pub fn on_reduction(th0: Cx, th1: Cx, tht1: Cx, thinf2: Cx) -> Self {
        ThetaPG {
            th0,
            th1,
            tht1,
            tht2: -(th0 + th1 + tht1 + thinf2 * 2.0 + 1.0),
            thinf1: thinf2 + 1.0,
            thinf2,
        }
    }
}

/// `ω = t1(t2 − 1)/(t2 − t1)`.
pub fn omega_of(t1: Cx, t2: Cx) -> Cx {
    t1 * (t2 - 1.0) / (t2 - t1)
}

/// `t1` with `ω(t1, t2) = ω` at fixed `t2`.
pub fn t1_of_omega(omega: Cx, t2: Cx) -> Cx {
    omega * t2 / (t2 - 1.0 + omega)
}

/// `dt1/dω` at fixed `t2`.
pub fn dt1_domega(omega: Cx, t2: Cx) -> Cx {
    let d = t2 - 1.0 + omega;
    t2 * (t2 - 1.0) / (d * d)
}

pub fn check_reduction(s: &PGState) -> Result<()> {
    let drift = (s.q[0] + s.q[1] - 1.0).norm();
    if drift >= REDUCTION_STATE_TOL {
        return Err(LabError::NotOnReduction(format!("|q1 + q2 − 1| = {drift:e}")));
    }
    let gap = (s.theta.thinf1 - s.theta.thinf2 - 1.0).norm();
    if gap >= REDUCTION_STATE_TOL {
        return Err(LabError::NotOnReduction(format!(
            "θ₁^∞ − θ₂^∞ differs from 1 by {gap:e}"
        )));
    }
    Ok(())
}

pub fn pvi_reduce(s: &PGState) -> Result<PVIState> {
    s.check()?;
    check_reduction(s)?;
    Ok(PVIState {
        omega: omega_of(s.t1, s.t2),
        q: s.q[0],
        p: s.p[0] - s.p[1],
        params: s.theta,
    })
}

/// `H(ω, Q, P)`.
pub fn pvi_hamiltonian(st: &PVIState) -> Cx {
    let (w, q, p, th) = (st.omega, st.q, st.p, &st.params);
    let c = th.th1 + th.thinf2 * 2.0;
    (p * p * q * (q - 1.0) * (q - w)
        - p * (c * q * (q - 1.0) + w * th.tht1 * (q - 1.0) + (w - 1.0) * th.tht2 * q)
        + th.thinf2 * (th.thinf2 + th.th1) * q)
        / (w * (w - 1.0))
}

/// `(∂H/∂Q, ∂H/∂P)`.
pub fn pvi_partials(st: &PVIState) -> (Cx, Cx) {
    let (w, q, p, th) = (st.omega, st.q, st.p, &st.params);
    let c = th.th1 + th.thinf2 * 2.0;
    let den = w * (w - 1.0);
    let cubic = q * (q - 1.0) * (q - w);
    let dcubic = q * q * 3.0 - (w + 1.0) * q * 2.0 + w;
    let lin = c * q * (q - 1.0) + w * th.tht1 * (q - 1.0) + (w - 1.0) * th.tht2 * q;
    let dlin = c * (q * 2.0 - 1.0) + w * th.tht1 + (w - 1.0) * th.tht2;
    let h_q = (p * p * dcubic - p * dlin + th.thinf2 * (th.thinf2 + th.th1)) / den;
    let h_p = (p * cubic * 2.0 - lin) / den;
    (h_q, h_p)
}

/// `(dQ/dω, dP/dω) = (∂H/∂P, −∂H/∂Q)`.
pub fn pvi_rhs(st: &PVIState) -> Result<(Cx, Cx)> {
    if st.omega.norm() < 1e-14 || (st.omega - 1.0).norm() < 1e-14 {
        return Err(LabError::PoleEvaluation(format!("ω = {}", st.omega)));
    }
    let (h_q, h_p) = pvi_partials(st);
    Ok((h_p, -h_q))
}

pub fn omega_loci() -> Vec<Locus<1>> {
    vec![Locus::point("ω = 0", re(0.0)), Locus::point("ω = 1", re(1.0))]
}

/// Integrates the reduced Hamiltonian system along a path in `ω`.
pub fn integrate_pvi(st: &PVIState, path: &XPath, opts: &OdeOptions) -> Result<Vec<PVIState>> {
    path.validate(&omega_loci())?;
    let tr = ode_integrate(
        |w: &[Cx; 1], dw: &[Cx; 1], y: &[Cx], dy: &mut [Cx]| {
            let (dq, dp) = pvi_rhs(&PVIState {
                omega: w[0],
                q: y[0],
                p: y[1],
                params: st.params,
            })?;
            dy[0] = dq * dw[0];
            dy[1] = dp * dw[0];
            Ok(())
        },
        &[st.q, st.p],
        path,
        opts,
    )?;
    Ok(tr
        .points
        .iter()
        .map(|p| PVIState {
            omega: p.at[0],
            q: p.state[0],
            p: p.state[1],
            params: st.params,
        })
        .collect())
}

/// Integrates the full polynomial system along the `t1`-flow at fixed `t2`,
/// parameterized by `ω`. Returns `(ω, state)` at every output point.
pub fn integrate_pg_in_omega(s0: &PGState, path: &XPath, opts: &OdeOptions) -> Result<Vec<(Cx, PGState)>> {
    s0.check()?;
    let t2 = s0.t2;
    let mut loci = omega_loci();
    // t1 → ∞ and t1 = t2 sit at ω = 1 − t2 and ω = ∞.
    loci.push(Locus::point("t1 = ∞", re(1.0) - t2));
    path.validate(&loci)?;
    let w0 = omega_of(s0.t1, t2);
    if (path.start()[0] - w0).norm() > 1e-12 * (1.0 + w0.norm()) {
        return Err(LabError::ConfigInvalid(format!(
            "ω path starts at {} but the state has ω = {w0}",
            path.start()[0]
        )));
    }
    let tr = ode_integrate(
        |w: &[Cx; 1], dw: &[Cx; 1], y: &[Cx], dy: &mut [Cx]| {
            let s = s0.with_vector(t1_of_omega(w[0], t2), t2, y);
            let f = pg_field(&s)?;
            let scale = dt1_domega(w[0], t2) * dw[0];
            for k in 0..4 {
                dy[k] = f.d_t1[k] * scale;
            }
            Ok(())
        },
        &s0.vector(),
        path,
        opts,
    )?;
    Ok(tr
        .points
        .iter()
        .map(|p| (p.at[0], s0.with_vector(t1_of_omega(p.at[0], t2), t2, &p.state)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_derivative, FdScheme};

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn reduced_state() -> PGState {
        let th = ThetaPG::on_reduction(c(0.3, 0.0), c(-0.2, 0.33), c(0.29, 0.0), c(0.25, -0.17));
        PGState::new(c(0.3, 0.2), c(-0.7, 0.5), [c(0.4, -0.3), c(0.6, 0.3)], [c(0.33, 0.5), c(-0.4, 0.14)], th)
            .unwrap()
    }

    #[test]
    fn omega_inverse() {
        let t2 = c(-0.7, 0.5);
        let w = c(0.37, -0.2);
        assert!((omega_of(t1_of_omega(w, t2), t2) - w).norm() < 1e-15);
        let d = fd_derivative(|w| Ok(t1_of_omega(w, t2)), w, &FdScheme::default()).unwrap();
        assert!((d - dt1_domega(w, t2)).norm() < 1e-10);
    }

    #[test]
    fn hamiltonian_without_momentum() {
        let mut st = pvi_reduce(&reduced_state()).unwrap();
        st.p = re(0.0);
        let th = st.params;
        let lhs = pvi_hamiltonian(&st) * st.omega * (st.omega - 1.0);
        assert!((lhs - th.thinf2 * (th.thinf2 + th.th1) * st.q).norm() < 1e-14);
    }

    #[test]
    fn analytic_partials_match_differences() {
        let st = pvi_reduce(&reduced_state()).unwrap();
        let (h_q, h_p) = pvi_partials(&st);
        let s = FdScheme::default();
        let fq = fd_derivative(|q| Ok(pvi_hamiltonian(&PVIState { q, ..st })), st.q, &s).unwrap();
        let fp = fd_derivative(|p| Ok(pvi_hamiltonian(&PVIState { p, ..st })), st.p, &s).unwrap();
        assert!((fq - h_q).norm() < 1e-10 && (fp - h_p).norm() < 1e-10);
    }

    #[test]
    fn preconditions_enforced() {
        let mut s = reduced_state();
        s.q[1] += 1e-3;
        assert!(matches!(pvi_reduce(&s), Err(LabError::NotOnReduction(_))));
        let mut s = reduced_state();
        let th = s.theta;
        s.theta = ThetaPG::from_free(th.th0, th.th1, th.tht1, th.tht2 + 0.1, th.thinf2);
        assert!(matches!(pvi_reduce(&s), Err(LabError::NotOnReduction(_))));
    }

    #[test]
    fn reduced_flow_matches_full_flow() {
        let s = reduced_state();
        let st = pvi_reduce(&s).unwrap();
        let path = XPath::segment([st.omega], [st.omega + c(0.3, 0.2)], 0.05);
        let opts = OdeOptions::default().with_samples(4);
        let full = integrate_pg_in_omega(&s, &path, &opts).unwrap();
        let red = integrate_pvi(&st, &path, &opts).unwrap();
        for ((w, ps), r) in full.iter().zip(&red) {
            assert!((w - r.omega).norm() < 1e-15);
            assert!((ps.q[0] + ps.q[1] - 1.0).norm() < 1e-9);
            assert!((ps.q[0] - r.q).norm() < 1e-9);
            assert!((ps.p[0] - ps.p[1] - r.p).norm() < 1e-9);
        }
    }
}

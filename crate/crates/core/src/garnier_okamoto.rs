//! Garnier–Okamoto coordinates: the zeros `λ_k` of the (1,2) entry of the
//! connection and the values `μ_k` of its (1,1) entry there, their
//! Hamiltonians `K_1, K_2`, and the scalar second-order equation satisfied by
//! the first row of the fundamental solution.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{fd_derivative, ode_integrate, re, Cx, FdScheme, Locus, OdeOptions, TPath};
use crate::schlesinger::{check_times, pole_positions, Normalization, SchlesingerState, ThetaGO};

/// Relative size below which `X(t)` counts as vanishing.
pub const CONDITION_III_TOL: f64 = 1e-12;
/// Relative separation below which `λ1 = λ2` counts as a double root.
pub const CONDITION_IV_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "GOStateRepr", into = "GOStateRepr")]
pub struct GOState {
    pub t1: Cx,
    pub t2: Cx,
    pub lambda: [Cx; 2],
    pub mu: [Cx; 2],
    pub theta: ThetaGO,
}

#[derive(Serialize, Deserialize)]
struct GOStateRepr {
    t1: Cx,
    t2: Cx,
    lambda: [Cx; 2],
    mu: [Cx; 2],
    theta: ThetaGO,
    #[serde(default)]
    kappa: Option<Cx>,
}

impl From<GOStateRepr> for GOState {
    fn from(r: GOStateRepr) -> Self {
        GOState {
            t1: r.t1,
            t2: r.t2,
            lambda: r.lambda,
            mu: r.mu,
            theta: r.theta,
        }
    }
}

impl From<GOState> for GOStateRepr {
    fn from(g: GOState) -> Self {
        GOStateRepr {
            t1: g.t1,
            t2: g.t2,
            lambda: g.lambda,
            mu: g.mu,
            kappa: Some(g.theta.kappa),
            theta: g.theta,
        }
    }
}

impl GOState {
    pub fn times(&self) -> [Cx; 4] {
        pole_positions(self.t1, self.t2)
    }

    fn t(&self, i: usize) -> Cx {
        if i == 0 {
            self.t1
        } else {
            self.t2
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let times = self.times();
        check_times(&times)?;
        check_separation(self.lambda)?;
        for l in self.lambda {
            for t in times {
                if (l - t).norm() < 1e-12 {
                    return Err(LabError::PoleEvaluation(format!("λ = {l} coincides with pole {t}")));
                }
            }
        }
        Ok(())
    }
}

fn check_separation(lambda: [Cx; 2]) -> Result<()> {
    let sep = (lambda[0] - lambda[1]).norm();
    let scale = 1.0 + lambda[0].norm().max(lambda[1].norm());
    if sep < CONDITION_IV_TOL * scale {
        return Err(LabError::ConditionIVViolated { separation: sep });
    }
    Ok(())
}

fn lex_order(a: Cx, b: Cx) -> [Cx; 2] {
    if (a.re, a.im) <= (b.re, b.im) {
        [a, b]
    } else {
        [b, a]
    }
}

/// The quadratic numerator `X·x² + b·x + c` of `q12(x) = Σ q12ⁱ/(x − t_i)`,
/// where `X = Σ t_i·q12ⁱ` (the cubic coefficient `Σ q12ⁱ` vanishes for
/// diagonal `A_∞`).
pub fn q12_numerator(s: &SchlesingerState) -> [Cx; 3] {
    let times = s.times();
    let q: [Cx; 4] = std::array::from_fn(|i| s.mats[i].a12);
    let mut x = Cx::default();
    let mut b = Cx::default();
    let mut c = Cx::default();
    for i in 0..4 {
        let others: Vec<Cx> = (0..4).filter(|&j| j != i).map(|j| times[j]).collect();
        let e2 = others[0] * others[1] + others[0] * others[2] + others[1] * others[2];
        let e3 = others[0] * others[1] * others[2];
        x += times[i] * q[i];
        b += q[i] * e2;
        c -= q[i] * e3;
    }
    [x, b, c]
}

/// `q12(x) = Σ q12ⁱ/(x − t_i)`.
pub fn q12_at(s: &SchlesingerState, x: Cx) -> Cx {
    s.times()
        .iter()
        .zip(&s.mats)
        .map(|(t, m)| m.a12 / (x - t))
        .sum()
}

/// `(λ1, λ2, X)` from a Q-normalized state, `λ1` lexicographically first.
pub fn extract_lambda(s: &SchlesingerState) -> Result<(Cx, Cx, Cx)> {
    s.require(Normalization::Q)?;
    let [x, b, c] = q12_numerator(s);
    let scale = s.mats.iter().map(|m| m.a12.norm()).fold(0.0, f64::max)
        * (1.0 + s.t1.norm().max(s.t2.norm()));
    if x.norm() <= CONDITION_III_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(LabError::ConditionIIIViolated { x, scale });
    }
    let (r1, r2) = crate::numerics::quad_roots(x, b, c)?;
    let lambda = lex_order(r1, r2);
    check_separation(lambda)?;
    Ok((lambda[0], lambda[1], x))
}

/// `μ = Σ q11ⁱ/(λ − t_i)`.
pub fn extract_mu(s: &SchlesingerState, lambda: Cx) -> Result<Cx> {
    let mut mu = Cx::default();
    for (t, m) in s.times().iter().zip(&s.mats) {
        let d = lambda - t;
        if d.norm() < 1e-14 * (1.0 + lambda.norm()) {
            return Err(LabError::PoleEvaluation(format!("λ = {lambda} coincides with pole {t}")));
        }
        mu += m.a11 / d;
    }
    Ok(mu)
}

/// Full coordinate extraction; B-normalized input is shifted first.
pub fn extract_go(s: &SchlesingerState) -> Result<GOState> {
    let q = s.normalized(Normalization::Q);
    let (l1, l2, _) = extract_lambda(&q)?;
    let g = GOState {
        t1: q.t1,
        t2: q.t2,
        lambda: [l1, l2],
        mu: [extract_mu(&q, l1)?, extract_mu(&q, l2)?],
        theta: q.theta,
    };
    g.check_invariants()?;
    Ok(g)
}

/// Like [`extract_go`], but labels `λ_k` by proximity to `previous` instead of
/// lexicographically.
pub fn extract_go_following(s: &SchlesingerState, previous: &GOState) -> Result<GOState> {
    let mut g = extract_go(s)?;
    let [a, b] = g.lambda;
    let [p, q] = previous.lambda;
    if (a - p).norm() + (b - q).norm() > (a - q).norm() + (b - p).norm() {
        g.lambda = [b, a];
        g.mu = [g.mu[1], g.mu[0]];
    }
    Ok(g)
}

/// Extracts coordinates at every point of a sequence of states, keeping the
/// labels continuous from the first point.
pub fn extract_along<'a>(
    states: impl IntoIterator<Item = &'a SchlesingerState>,
) -> Result<Vec<GOState>> {
    let mut out: Vec<GOState> = Vec::new();
    for s in states {
        let g = match out.last() {
            None => extract_go(s)?,
            Some(prev) => extract_go_following(s, prev)?,
        };
        out.push(g);
    }
    Ok(out)
}

/// `K_i`, `i ∈ {1, 2}`.
pub fn hamiltonian_k(i: usize, g: &GOState) -> Result<Cx> {
    assert!(i == 1 || i == 2, "K_i is defined for i = 1, 2");
    check_times(&g.times())?;
    check_separation(g.lambda)?;
    let (ii, jj) = (i - 1, 2 - i);
    let ti = g.t(ii);
    let tj = g.t(jj);
    let th = &g.theta.theta;
    let [l1, l2] = g.lambda;
    let m_i = -(l1 - ti) * (l2 - ti) / ((ti - tj) * (ti - 1.0) * ti);
    let mut total = Cx::default();
    for k in 0..2 {
        let lk = g.lambda[k];
        let lo = g.lambda[1 - k];
        let mk = (lk - tj) * (lk - 1.0) * lk / (lk - lo);
        let mut coeff = th[2] / (lk - 1.0) + th[3] / lk;
        for m in 0..2 {
            let shift = if m == ii { 1.0 } else { 0.0 };
            coeff += (th[m] - shift) / (lk - g.t(m));
        }
        let mu = g.mu[k];
        total += mk * (mu * mu - coeff * mu + g.theta.kappa / (lk * (lk - 1.0)));
    }
    Ok(m_i * total)
}

/// Hamilton's equations of `K_1`, `K_2`: `dλ[j][k] = ∂λ_k/∂t_j = ∂K_j/∂μ_k`,
/// `dmu[j][k] = ∂μ_k/∂t_j = −∂K_j/∂λ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GOField {
    pub dlambda: [[Cx; 2]; 2],
    pub dmu: [[Cx; 2]; 2],
}

/// Partials of `K_j` by finite differences at fixed times.
pub fn go_vector_field(g: &GOState, scheme: &FdScheme) -> Result<GOField> {
    let mut f = GOField {
        dlambda: [[Cx::default(); 2]; 2],
        dmu: [[Cx::default(); 2]; 2],
    };
    for j in 0..2 {
        for k in 0..2 {
            f.dlambda[j][k] = fd_derivative(
                |m| {
                    let mut h = g.clone();
                    h.mu[k] = m;
                    hamiltonian_k(j + 1, &h)
                },
                g.mu[k],
                scheme,
            )?;
            f.dmu[j][k] = -fd_derivative(
                |l| {
                    let mut h = g.clone();
                    h.lambda[k] = l;
                    hamiltonian_k(j + 1, &h)
                },
                g.lambda[k],
                scheme,
            )?;
        }
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GOTrajectory {
    pub points: Vec<GOState>,
}

impl GOTrajectory {
    pub fn end(&self) -> &GOState {
        self.points.last().expect("non-empty trajectory")
    }
}

/// Integrates the GO flow along a path in `(t1, t2)`.
pub fn integrate_go(
    g0: &GOState,
    path: &TPath,
    opts: &OdeOptions,
    scheme: &FdScheme,
) -> Result<GOTrajectory> {
    path.validate(&Locus::time_singularities())?;
    g0.check_invariants()?;
    let y0 = vec![g0.lambda[0], g0.lambda[1], g0.mu[0], g0.mu[1]];
    let at = |t: &[Cx; 2], y: &[Cx]| GOState {
        t1: t[0],
        t2: t[1],
        lambda: [y[0], y[1]],
        mu: [y[2], y[3]],
        theta: g0.theta,
    };
    let tr = ode_integrate(
        |t: &[Cx; 2], dt: &[Cx; 2], y: &[Cx], dy: &mut [Cx]| {
            let g = at(t, y);
            check_separation(g.lambda)?;
            let f = go_vector_field(&g, scheme)?;
            for k in 0..2 {
                dy[k] = f.dlambda[0][k] * dt[0] + f.dlambda[1][k] * dt[1];
                dy[2 + k] = f.dmu[0][k] * dt[0] + f.dmu[1][k] * dt[1];
            }
            Ok(())
        },
        &y0,
        path,
        opts,
    )?;
    Ok(GOTrajectory {
        points: tr.points.iter().map(|p| at(&p.at, &p.state)).collect(),
    })
}

/// Coefficients `(c1, c0)` of `z'' = c1·z' + c0·z`.
pub fn garx_coefficients(g: &GOState, k1: Cx, k2: Cx, x: Cx) -> Result<(Cx, Cx)> {
    let times = g.times();
    for p in times.iter().chain(g.lambda.iter()) {
        if (x - p).norm() < 1e-14 * (1.0 + x.norm()) {
            return Err(LabError::PoleEvaluation(format!("x = {x} is a singular point of the scalar equation")));
        }
    }
    let th = &g.theta.theta;
    let mut c1 = Cx::default();
    for i in 0..4 {
        c1 += (th[i] - 1.0) / (x - times[i]);
    }
    for l in g.lambda {
        c1 += re(1.0) / (x - l);
    }
    let base = x * (x - 1.0);
    let mut c0 = g.theta.kappa / base;
    for (i, k) in [k1, k2].into_iter().enumerate() {
        let t = times[i];
        c0 -= t * (t - 1.0) * k / (base * (x - t));
    }
    for (l, m) in g.lambda.iter().zip(&g.mu) {
        c0 += l * (l - 1.0) * m / (base * (x - l));
    }
    Ok((c1, -c0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Mat2;
    use crate::schlesinger::{generate_b_state, integrate_schlesinger, GenOptions};

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn theta() -> [Cx; 4] {
        [c(0.3, 0.1), c(-0.45, 0.2), c(0.6, -0.3), c(0.25, 0.35)]
    }

    fn q_state(seed: u64) -> SchlesingerState {
        generate_b_state(theta(), &GenOptions::default(), seed)
            .unwrap()
            .state
            .normalized(Normalization::Q)
    }

    fn go_state() -> GOState {
        GOState {
            t1: c(0.3, 0.4),
            t2: c(-0.5, 0.2),
            lambda: [c(1.4, -0.6), c(-0.7, -0.9)],
            mu: [c(0.3, 0.5), c(-0.8, 0.2)],
            theta: ThetaGO::new(theta(), c(1.3, 0.4)),
        }
    }

    #[test]
    fn lambda_from_partial_fractions() {
        // q12(x) = X(x − 2)(x − 3)/Π(x − t_i): residues N(t_i)/Π_{j≠i}(t_i − t_j).
        let (t1, t2) = (c(0.3, 0.4), c(-0.5, 0.2));
        let times = pole_positions(t1, t2);
        let xlead = c(0.7, -0.2);
        let mats: [Mat2; 4] = std::array::from_fn(|i| {
            let ti = times[i];
            let mut den = re(1.0);
            for j in (0..4).filter(|&j| j != i) {
                den *= ti - times[j];
            }
            let r = xlead * (ti - 2.0) * (ti - 3.0) / den;
            Mat2::new(re(0.0), r, re(0.0), re(0.0))
        });
        let s = SchlesingerState::new(t1, t2, mats, Normalization::Q, ThetaGO::new([re(0.0); 4], re(1.0)))
            .unwrap();
        let (l1, l2, x) = extract_lambda(&s).unwrap();
        assert!((l1 - re(2.0)).norm() < 1e-12 && (l2 - re(3.0)).norm() < 1e-12);
        assert!((x - xlead).norm() < 1e-12);
    }

    #[test]
    fn extracted_lambda_are_zeros_of_q12() {
        for seed in 0..20 {
            let s = q_state(seed);
            let (l1, l2, _) = extract_lambda(&s).unwrap();
            let scale: f64 = s.mats.iter().map(|m| m.a12.norm()).sum();
            for l in [l1, l2] {
                let d: f64 = s.times().iter().map(|t| (l - t).norm()).fold(f64::INFINITY, f64::min);
                assert!(q12_at(&s, l).norm() * d < 1e-11 * scale, "seed {seed}");
            }
        }
    }

    #[test]
    fn condition_three_detected() {
        let s = SchlesingerState::new(
            c(0.3, 0.4),
            c(-0.5, 0.2),
            [Mat2::diag(re(0.1), re(0.0)); 4],
            Normalization::Q,
            ThetaGO::new([re(0.1); 4], re(1.0)),
        )
        .unwrap();
        assert!(matches!(extract_lambda(&s), Err(LabError::ConditionIIIViolated { .. })));
    }

    #[test]
    fn mu_matches_direct_sum() {
        let s = q_state(4);
        let l = c(2.1, -0.7);
        let direct: Cx = (0..4).map(|i| s.mats[i].a11 / (l - s.times()[i])).sum();
        assert!((extract_mu(&s, l).unwrap() - direct).norm() < 1e-15);
        assert!(matches!(extract_mu(&s, re(1.0)), Err(LabError::PoleEvaluation(_))));
    }

    #[test]
    fn k_vanishes_without_momenta_and_kappa() {
        // κ = 0 needs (Σθ − 1)² = θ∞².
        let th = [c(0.2, 0.1), c(0.3, 0.0), c(-0.4, 0.2), c(0.5, -0.1)];
        let sum: Cx = th.iter().sum();
        let mut g = go_state();
        g.theta = ThetaGO::new(th, sum - 1.0);
        g.mu = [re(0.0); 2];
        assert!(g.theta.kappa.norm() < 1e-15);
        for i in 1..=2 {
            assert!(hamiltonian_k(i, &g).unwrap().norm() < 1e-15);
        }
    }

    /// Independent evaluation of `K_i`, written with explicit indices.
    fn k_oracle(i: usize, g: &GOState) -> Cx {
        let t = [g.t1, g.t2, re(1.0), re(0.0)];
        let th = g.theta.theta;
        let (ti, tn) = if i == 1 { (t[0], t[1]) } else { (t[1], t[0]) };
        let (l1, l2) = (g.lambda[0], g.lambda[1]);
        let big_m = -(l1 - ti) * (l2 - ti) / ((ti - tn) * (ti - 1.0) * ti);
        let term = |lk: Cx, lother: Cx, mu: Cx| {
            let d1 = if i == 1 { 1.0 } else { 0.0 };
            let d2 = if i == 2 { 1.0 } else { 0.0 };
            let p = (th[0] - d1) / (lk - t[0]) + (th[1] - d2) / (lk - t[1]) + th[2] / (lk - 1.0) + th[3] / lk;
            let bracket = mu * mu - p * mu + g.theta.kappa / (lk * (lk - 1.0));
            (lk - tn) * (lk - 1.0) * lk / (lk - lother) * bracket
        };
        big_m * (term(l1, l2, g.mu[0]) + term(l2, l1, g.mu[1]))
    }

    #[test]
    fn k_matches_oracle_and_swap_symmetry() {
        let g = go_state();
        for i in 1..=2 {
            let k = hamiltonian_k(i, &g).unwrap();
            assert!((k - k_oracle(i, &g)).norm() < 1e-13 * (1.0 + k.norm()));
        }
        // Swapping (t1, θ1) ↔ (t2, θ2) exchanges K1 and K2.
        let mut h = g.clone();
        h.t1 = g.t2;
        h.t2 = g.t1;
        let mut th = g.theta.theta;
        th.swap(0, 1);
        h.theta = ThetaGO::new(th, g.theta.theta_inf);
        let k1 = hamiltonian_k(1, &g).unwrap();
        let k2_swapped = hamiltonian_k(2, &h).unwrap();
        assert!((k1 - k2_swapped).norm() < 1e-13 * (1.0 + k1.norm()));
    }

    #[test]
    fn k_with_zero_momenta_is_kappa_term() {
        let mut g = go_state();
        g.mu = [re(0.0); 2];
        for i in 1..=2usize {
            let (ti, tn) = if i == 1 { (g.t1, g.t2) } else { (g.t2, g.t1) };
            let [l1, l2] = g.lambda;
            let m = -(l1 - ti) * (l2 - ti) / ((ti - tn) * (ti - 1.0) * ti);
            let expect = m
                * ((l1 - tn) * (l1 - 1.0) * l1 / (l1 - l2) * g.theta.kappa / (l1 * (l1 - 1.0))
                    + (l2 - tn) * (l2 - 1.0) * l2 / (l2 - l1) * g.theta.kappa / (l2 * (l2 - 1.0)));
            assert!((hamiltonian_k(i, &g).unwrap() - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn field_at_zero_momenta_is_linear_coefficient() {
        let mut g = go_state();
        g.mu = [re(0.0); 2];
        let f = go_vector_field(&g, &FdScheme::default()).unwrap();
        for j in 0..2usize {
            let (tj, tn) = if j == 0 { (g.t1, g.t2) } else { (g.t2, g.t1) };
            let [l1, l2] = g.lambda;
            let m = -(l1 - tj) * (l2 - tj) / ((tj - tn) * (tj - 1.0) * tj);
            for k in 0..2 {
                let lk = g.lambda[k];
                let lo = g.lambda[1 - k];
                let th = g.theta.theta;
                let mut p = th[2] / (lk - 1.0) + th[3] / lk;
                for mm in 0..2 {
                    let d = if mm == j { 1.0 } else { 0.0 };
                    p += (th[mm] - d) / (lk - [g.t1, g.t2][mm]);
                }
                let expect = -m * (lk - tn) * (lk - 1.0) * lk / (lk - lo) * p;
                assert!((f.dlambda[j][k] - expect).norm() < 1e-9 * (1.0 + expect.norm()));
            }
        }
        // Two step sizes agree on −∂K/∂λ.
        let f2 = go_vector_field(&g, &FdScheme::default().with_step(3e-4)).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((f.dmu[j][k] - f2.dmu[j][k]).norm() < 1e-8 * (1.0 + f.dmu[j][k].norm()));
            }
        }
    }

    #[test]
    fn go_flow_matches_schlesinger_flow() {
        let s = q_state(2);
        let g0 = extract_go(&s).unwrap();
        let b = [s.t1 + c(0.1, 0.05), s.t2 + c(-0.05, 0.1)];
        let path = TPath::segment([s.t1, s.t2], b, 0.05);
        let opts = OdeOptions::default();
        let sch = integrate_schlesinger(&s, &path, &opts).unwrap();
        let ext = extract_along(sch.points.iter().map(|p| &p.state)).unwrap();
        let go = integrate_go(&g0, &path, &opts, &FdScheme::default()).unwrap();
        let a = ext.last().unwrap();
        let b = go.end();
        for k in 0..2 {
            assert!((a.lambda[k] - b.lambda[k]).norm() < 1e-6 * (1.0 + a.lambda[k].norm()));
            assert!((a.mu[k] - b.mu[k]).norm() < 1e-6 * (1.0 + a.mu[k].norm()));
        }
    }

    #[test]
    fn garx_residues_and_asymptotics() {
        let g = go_state();
        let k1 = hamiltonian_k(1, &g).unwrap();
        let k2 = hamiltonian_k(2, &g).unwrap();
        let eps = 1e-7;
        for (p, r) in [(g.lambda[0], re(1.0)), (g.t1, g.theta.theta[0] - 1.0), (re(0.0), g.theta.theta[3] - 1.0)] {
            let x = p + c(eps, 0.0);
            let (c1, _) = garx_coefficients(&g, k1, k2, x).unwrap();
            assert!((c1 * eps - r).norm() < 1e-5, "{p}");
        }
        let x = c(1e6, 0.0);
        let (c1, _) = garx_coefficients(&g, k1, k2, x).unwrap();
        let lead = g.theta.theta_sum() - 4.0 + 2.0;
        assert!((c1 * x - lead).norm() < 1e-5);
    }

    #[test]
    fn json_has_kappa() {
        let g = go_state();
        let v = serde_json::to_value(&g).unwrap();
        for key in ["t1", "t2", "lambda", "mu", "theta", "kappa"] {
            assert!(v.get(key).is_some());
        }
        let back: GOState = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}

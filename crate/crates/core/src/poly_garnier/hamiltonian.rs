use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{ode_integrate, re, solve_linear, Cx, Locus, OdeOptions, OdeStats, TPath};
use crate::schlesinger::{check_times, pole_positions};

/// Tolerance of the Fuchs relation `Σ θ = 0` on load.
pub const FUCHS_TOL: f64 = 1e-12;

/// Exponents `θ⁰, θ¹, θ^{t1}, θ^{t2}, θ₁^∞, θ₂^∞` of the polynomial system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThetaPGRepr", into = "ThetaPGRepr")]
pub struct ThetaPG {
    pub th0: Cx,
    pub th1: Cx,
    pub tht1: Cx,
    pub tht2: Cx,
    pub thinf1: Cx,
    pub thinf2: Cx,
}

#[derive(Serialize, Deserialize)]
struct ThetaPGRepr {
    th0: Cx,
    th1: Cx,
    tht1: Cx,
    tht2: Cx,
    thinf1: Cx,
    thinf2: Cx,
}

impl TryFrom<ThetaPGRepr> for ThetaPG {
    type Error = LabError;
    fn try_from(r: ThetaPGRepr) -> Result<Self> {
        let t = ThetaPG {
            th0: r.th0,
            th1: r.th1,
            tht1: r.tht1,
            tht2: r.tht2,
            thinf1: r.thinf1,
            thinf2: r.thinf2,
        };
        t.check_fuchs()?;
        Ok(t)
    }
}

impl From<ThetaPG> for ThetaPGRepr {
    fn from(t: ThetaPG) -> Self {
        ThetaPGRepr {
            th0: t.th0,
            th1: t.th1,
            tht1: t.tht1,
            tht2: t.tht2,
            thinf1: t.thinf1,
            thinf2: t.thinf2,
        }
    }
}

impl ThetaPG {
    /// Exponents with `θ₁^∞` fixed by the Fuchs relation.
    pub fn from_free(th0: Cx, th1: Cx, tht1: Cx, tht2: Cx, thinf2: Cx) -> Self {
        ThetaPG {
            th0,
            th1,
            tht1,
            tht2,
            thinf1: -(th0 + th1 + tht1 + tht2 + thinf2),
            thinf2,
        }
    }

    pub fn fuchs_sum(&self) -> Cx {
        self.th0 + self.th1 + self.tht1 + self.tht2 + self.thinf1 + self.thinf2
    }

    pub fn check_fuchs(&self) -> Result<()> {
        let s = self.fuchs_sum();
        if s.norm() > FUCHS_TOL {
            return Err(LabError::FuchsViolation(s));
        }
        Ok(())
    }

    /// `θ^{t_i}` for `i ∈ {0, 1}` (zero-based).
    pub fn tht(&self, i: usize) -> Cx {
        if i == 0 {
            self.tht1
        } else {
            self.tht2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PGState {
    pub t1: Cx,
    pub t2: Cx,
    pub q: [Cx; 2],
    pub p: [Cx; 2],
    pub theta: ThetaPG,
}

impl PGState {
    pub fn new(t1: Cx, t2: Cx, q: [Cx; 2], p: [Cx; 2], theta: ThetaPG) -> Result<Self> {
        let s = PGState { t1, t2, q, p, theta };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        check_times(&pole_positions(self.t1, self.t2))?;
        self.theta.check_fuchs()
    }

    pub fn t(&self, i: usize) -> Cx {
        if i == 0 {
            self.t1
        } else {
            self.t2
        }
    }

    /// The same state with the roles of the two times exchanged.
    pub fn swapped(&self) -> PGState {
        PGState {
            t1: self.t2,
            t2: self.t1,
            q: [self.q[1], self.q[0]],
            p: [self.p[1], self.p[0]],
            theta: ThetaPG {
                tht1: self.theta.tht2,
                tht2: self.theta.tht1,
                ..self.theta
            },
        }
    }

    pub fn vector(&self) -> [Cx; 4] {
        [self.q[0], self.q[1], self.p[0], self.p[1]]
    }

    pub fn with_vector(&self, t1: Cx, t2: Cx, v: &[Cx]) -> PGState {
        PGState {
            t1,
            t2,
            q: [v[0], v[1]],
            p: [v[2], v[3]],
            theta: self.theta,
        }
    }
}

/// `t_i(t_i − 1)·H_{Gar,t_i}` in the variables of time `i` (first slot) and
/// the other time (second slot).
fn scaled_h(ti: Cx, tj: Cx, qi: Cx, qj: Cx, pi: Cx, pj: Cx, tti: Cx, ttj: Cx, th: &ThetaPG) -> Cx {
    let (th0, th1, ti2) = (th.th0, th.th1, th.thinf2);
    qi * (qi - 1.0) * (qi - ti) * pi * pi
        + ((th0 + ttj + 1.0) * qi * (qi - 1.0) - (ti2 * 2.0 + th1 + th0 + tti + ttj + 1.0) * qi * (qi - ti)
            + tti * (qi - 1.0) * (qi - ti))
            * pi
        + ti2 * (ti2 + th1) * qi
        + (qi * pi * 2.0 + qj * pj - th1 - ti2 * 2.0) * qi * qj * pj
        - (ti * (ti - 1.0) * (pi * qi + tti) * pi * qj - ti * (tj - 1.0) * (pi * qi * 2.0 + tti) * pj * qj
            + tj * (ti - 1.0) * qi * (pj * pj * qj + ttj * (pj - pi)))
            / (ti - tj)
}

/// `H_{Gar,t_i}`, `i ∈ {1, 2}`. The `i = 2` Hamiltonian is the `i = 1`
/// expression with `t1↔t2`, `q1↔q2`, `p1↔p2` (and `θ^{t1}↔θ^{t2}`).
pub fn hamiltonian_hgar(i: usize, s: &PGState) -> Result<Cx> {
    assert!(i == 1 || i == 2, "H_Gar,t_i is defined for i = 1, 2");
    s.check()?;
    let (a, b) = (i - 1, 2 - i);
    let ti = s.t(a);
    let scaled = scaled_h(
        ti,
        s.t(b),
        s.q[a],
        s.q[b],
        s.p[a],
        s.p[b],
        s.theta.tht(a),
        s.theta.tht(b),
        &s.theta,
    );
    Ok(scaled / (ti * (ti - 1.0)))
}

/// The eight explicit right-hand sides: `oqo = t1(t1−1)·∂q1/∂t1`,
/// `opo = t1(t1−1)·∂q2/∂t1`, `oppo = t1(t1−1)·∂p1/∂t1`,
/// `opt = t1(t1−1)·∂p2/∂t1`, and `tqo, tqt, tpo, tpt` likewise for `t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitRhs {
    pub oqo: Cx,
    pub opo: Cx,
    pub oppo: Cx,
    pub opt: Cx,
    pub tqo: Cx,
    pub tqt: Cx,
    pub tpo: Cx,
    pub tpt: Cx,
}

/// Plain derivatives `∂(q1, q2, p1, p2)/∂t1` and `∂/∂t2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PGField {
    pub d_t1: [Cx; 4],
    pub d_t2: [Cx; 4],
}

impl ExplicitRhs {
    pub fn as_array(&self) -> [Cx; 8] {
        [
            self.oqo, self.opo, self.oppo, self.opt, self.tqo, self.tqt, self.tpo, self.tpt,
        ]
    }

    pub const NAMES: [&'static str; 8] = ["oqo", "opo", "oppo", "opt", "tqo", "tqt", "tpo", "tpt"];

    pub fn derivatives(&self, t1: Cx, t2: Cx) -> PGField {
        let f1 = re(1.0) / (t1 * (t1 - 1.0));
        let f2 = re(1.0) / (t2 * (t2 - 1.0));
        PGField {
            d_t1: [self.oqo * f1, self.opo * f1, self.oppo * f1, self.opt * f1],
            d_t2: [self.tqo * f2, self.tqt * f2, self.tpo * f2, self.tpt * f2],
        }
    }
}

pub fn pg_rhs_explicit(s: &PGState) -> Result<ExplicitRhs> {
    s.check()?;
    let (t1, t2) = (s.t1, s.t2);
    let [q1, q2] = s.q;
    let [p1, p2] = s.p;
    let th = &s.theta;
    let (tt1, tt2, th0) = (th.tht1, th.tht2, th.th0);
    let d = t1 - t2;
    let c = th.th1 + th.thinf2 * 2.0;
    let one = re(1.0);

    let oqo = p1 * q1 * 2.0 * ((q1 - 1.0) * (q1 - t1) - t1 * (t1 - 1.0) / d * q2)
        + p2 * q1 * q2 * 2.0 * (q1 + t1 * (t2 - 1.0) / d)
        - c * q1 * q1
        - (one + th0 + tt1 + tt2) * q1
        + (one + c + th0 + tt2) * t1 * q1
        + t1 * tt1
        + (t1 - 1.0) / d * (t2 * tt2 * q1 - t1 * tt1 * q2);
    let opo = p1 * q1 * q2 * 2.0 * (q1 + t1 * (t2 - 1.0) / d)
        + p2 * q1 * q2 * 2.0 * (q2 - t2 * (t1 - 1.0) / d)
        - c * q1 * q2
        - (t2 * (t1 - 1.0) * tt2 * q1 - t1 * (t2 - 1.0) * tt1 * q2) / d;
    let oppo = -p1 * p1 * (q1 * q1 * 3.0 - (t1 + 1.0) * q1 * 2.0 + t1 - t1 * (t1 - 1.0) / d * q2)
        - p2 * p1 * q2 * 2.0 * (q1 * 2.0 + t1 * (t2 - 1.0) / d)
        - p2 * p2 * q2 * (q2 - t2 * (t1 - 1.0) / d)
        + p1 * (c * q1 * 2.0 + (one + th0 + tt1 + tt2) - (one + c + th0 + tt2) * t1 - t2 * (t1 - 1.0) * tt2 / d)
        + p2 * (c * q2 + t2 * (t1 - 1.0) * tt2 / d)
        - th.thinf2 * (th.thinf2 + th.th1);
    let opt = p1 * p1 * q1 * t1 * (t1 - 1.0) / d
        - p2 * p1 * q1 * 2.0 * (q1 + t1 * (t2 - 1.0) / d)
        - p2 * p2 * q1 * (q2 * 2.0 - t2 * (t1 - 1.0) / d)
        + p1 * tt1 * t1 * (t1 - 1.0) / d
        + p2 * (c * q1 - t1 * (t2 - 1.0) * tt1 / d);
    let tqo = p1 * q1 * q2 * 2.0 * (q1 + t1 * (t2 - 1.0) / d)
        + p2 * q1 * q2 * 2.0 * (q2 - t2 * (t1 - 1.0) / d)
        - c * q1 * q2
        - (t2 * (t1 - 1.0) * tt2 * q1 - t1 * (t2 - 1.0) * tt1 * q2) / d;
    let tqt = p1 * q1 * q2 * 2.0 * (q2 - t2 * (t1 - 1.0) / d)
        + p2 * q2 * 2.0 * ((q2 - 1.0) * (q2 - t2) + t2 * (t2 - 1.0) / d * q1)
        - c * q2 * q2
        - (one + th0 + tt1 + tt2) * q2
        + (one + c + th0 + tt1) * t2 * q2
        + t2 * tt2
        + (t2 - 1.0) / d * (t2 * tt2 * q1 - t1 * tt1 * q2);
    let tpo = -p1 * p1 * q2 * (q1 * 2.0 + t1 * (t2 - 1.0) / d)
        - p2 * p1 * q2 * 2.0 * (q2 - t2 * (t1 - 1.0) / d)
        - p2 * p2 * q2 * t2 * (t2 - 1.0) / d
        + p1 * (c * q2 + t2 * (t1 - 1.0) * tt2 / d)
        - p2 * tt2 * t2 * (t2 - 1.0) / d;
    let tpt = -p1 * p1 * q1 * (q1 + t1 * (t2 - 1.0) / d)
        - p2 * p1 * q1 * 2.0 * (q2 * 2.0 - t2 * (t1 - 1.0) / d)
        - p2 * p2 * (q2 * q2 * 3.0 - q2 * (t2 + 1.0) * 2.0 + t2 + t2 * (t2 - 1.0) / d * q1)
        + p1 * (c * q1 - t1 * (t2 - 1.0) * tt1 / d)
        + p2 * (c * q2 * 2.0 + (one + th0 + tt1 + tt2) - (one + c + th0 + tt1) * t2 + t1 * (t2 - 1.0) * tt1 / d)
        - th.thinf2 * (th.thinf2 + th.th1);
    Ok(ExplicitRhs {
        oqo,
        opo,
        oppo,
        opt,
        tqo,
        tqt,
        tpo,
        tpt,
    })
}

pub fn pg_field(s: &PGState) -> Result<PGField> {
    Ok(pg_rhs_explicit(s)?.derivatives(s.t1, s.t2))
}

/// `((ln u)_{t1}, (ln u)_{t2})` for the gauge function of the linearization.
pub fn u_logderiv(s: &PGState) -> Result<(Cx, Cx)> {
    s.check()?;
    let th = &s.theta;
    let c = th.th1 + th.thinf2 * 2.0;
    let mut out = [Cx::default(); 2];
    for i in 0..2 {
        let j = 1 - i;
        let (ti, qi, pi) = (s.t(i), s.q[i], s.p[i]);
        let num = qi * (pi * (ti - qi) * 2.0 + c) - qi * s.p[j] * s.q[j] * 2.0 + ti * th.tht(i);
        out[i] = num / (ti * (ti - 1.0));
    }
    Ok((out[0], out[1]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PGPoint {
    pub state: PGState,
    /// Gauge function `u`, equal to 1 at the base point.
    pub u: Cx,
    pub ln_u: Cx,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PGTrajectory {
    pub points: Vec<PGPoint>,
    pub stats: OdeStats,
}

impl PGTrajectory {
    pub fn end(&self) -> &PGPoint {
        self.points.last().expect("non-empty trajectory")
    }
}

/// Integrates the polynomial system together with `ln u` along a path in `(t1, t2)`.
pub fn integrate_pg(s0: &PGState, path: &TPath, opts: &OdeOptions) -> Result<PGTrajectory> {
    integrate_pg_from(s0, re(0.0), path, opts)
}

/// As [`integrate_pg`], starting from a given value of `ln u`.
pub fn integrate_pg_from(s0: &PGState, ln_u0: Cx, path: &TPath, opts: &OdeOptions) -> Result<PGTrajectory> {
    s0.check()?;
    path.validate(&Locus::time_singularities())?;
    let start = path.start();
    if (start[0] - s0.t1).norm() > 1e-14 || (start[1] - s0.t2).norm() > 1e-14 {
        return Err(LabError::ConfigInvalid("path does not start at the state's times".into()));
    }
    let mut y0 = s0.vector().to_vec();
    y0.push(ln_u0);
    let tr = ode_integrate(
        |t: &[Cx; 2], dt: &[Cx; 2], y: &[Cx], dy: &mut [Cx]| {
            let s = s0.with_vector(t[0], t[1], y);
            let f = pg_field(&s)?;
            let (u1, u2) = u_logderiv(&s)?;
            for k in 0..4 {
                dy[k] = f.d_t1[k] * dt[0] + f.d_t2[k] * dt[1];
            }
            dy[4] = u1 * dt[0] + u2 * dt[1];
            Ok(())
        },
        &y0,
        path,
        opts,
    )?;
    let points = tr
        .points
        .iter()
        .map(|p| PGPoint {
            state: s0.with_vector(p.at[0], p.at[1], &p.state),
            u: p.state[4].exp(),
            ln_u: p.state[4],
        })
        .collect();
    Ok(PGTrajectory {
        points,
        stats: tr.stats,
    })
}

/// Seeded random state with the given exponents and times.
pub fn generate_pg_state(theta: ThetaPG, t1: Cx, t2: Cx, scale: f64, seed: u64) -> Result<PGState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Cx::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    let q = [draw(), draw()];
    let p = [draw(), draw()];
    PGState::new(t1, t2, q, p, theta)
}

/// Seeded Levenberg–Marquardt search for `(q, p)` at which all eight
/// right-hand sides vanish at the given times.
pub fn find_fixed_point(template: &PGState, radius: f64, seed: u64) -> Result<PGState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: [Cx; 4] = std::array::from_fn(|_| {
        Cx::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius))
    });
    let residual = |v: &[Cx; 4]| -> Result<[Cx; 8]> {
        Ok(pg_rhs_explicit(&template.with_vector(template.t1, template.t2, v))?.as_array())
    };
    let norm = |r: &[Cx; 8]| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut r = residual(&v)?;
    let mut damping = 1e-3;
    for _ in 0..200 {
        if norm(&r) < 1e-14 {
            return Ok(template.with_vector(template.t1, template.t2, &v));
        }
        // Holomorphic Jacobian by central differences.
        let mut jac = [[Cx::default(); 4]; 8];
        for k in 0..4 {
            let h = 1e-7 * (1.0 + v[k].norm());
            let mut vp = v;
            let mut vm = v;
            vp[k] += h;
            vm[k] -= h;
            let (rp, rm) = (residual(&vp)?, residual(&vm)?);
            for e in 0..8 {
                jac[e][k] = (rp[e] - rm[e]) / (2.0 * h);
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            // (JᴴJ + δI)·step = −Jᴴr
            let mut m = vec![Cx::default(); 16];
            let mut rhs = vec![Cx::default(); 4];
            for a in 0..4 {
                for b in 0..4 {
                    m[a * 4 + b] = (0..8).map(|e| jac[e][a].conj() * jac[e][b]).sum();
                }
                m[a * 4 + a] += damping;
                rhs[a] = -(0..8).map(|e| jac[e][a].conj() * r[e]).sum::<Cx>();
            }
            let Some(step) = solve_linear(m, rhs, 4) else {
                damping *= 10.0;
                continue;
            };
            let trial: [Cx; 4] = std::array::from_fn(|k| v[k] + step[k]);
            let rt = residual(&trial)?;
            if norm(&rt) < norm(&r) {
                v = trial;
                r = rt;
                damping = (damping / 3.0).max(1e-15);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if norm(&r) < 1e-12 {
        return Ok(template.with_vector(template.t1, template.t2, &v));
    }
    Err(LabError::RootSearchFailed(format!(
        "fixed-point search stalled with residual {:e}",
        norm(&r)
    )))
}

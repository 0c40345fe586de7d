//! Joint transport of the residues, `ln τ`, fundamental matrices at a few
//! probe points, and every logarithm that enters a gauge prefactor.
//!
//! Logarithms are integrated as ODE components (`d ln f = df/f`), so their
//! branch is the continuation along the transport path.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::{integrate_unit, Cx, Mat2, OdeOptions, TPath, XPath};
use crate::schlesinger::{
    check_times, connection_at, schlesinger_rhs4, tau_logderiv4, Normalization, SchlesingerState, ThetaGO,
};

/// Index pairs `(i, j)`, `i < j`, of the six pole differences `t_i − t_j`.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Minimum distance a probe or a pole keeps from any other pole during a move.
pub const TRANSPORT_CLEARANCE: f64 = 1e-6;

/// A point `x` of the spectral plane with `Φ(x)` and `ln(x − t_k)`, `k = 1..4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub x: Cx,
    pub phi: Mat2,
    pub ln_d: [Cx; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub times: [Cx; 4],
    pub mats: [Mat2; 4],
    pub ln_tau: Cx,
    /// `ln(t_i − t_j)` in the order of [`PAIRS`].
    pub ln_tt: [Cx; 6],
    pub probes: Vec<Probe>,
}

fn min_on_segment(f0: Cx, f1: Cx) -> f64 {
    let df = f1 - f0;
    let d2 = df.norm_sqr();
    if d2 == 0.0 {
        return f0.norm();
    }
    let s = (-(f0 * df.conj()).re / d2).clamp(0.0, 1.0);
    (f0 + df * s).norm()
}

fn clearance_error(what: String, distance: f64) -> LabError {
    LabError::PathViolation {
        segment: 0,
        locus: what,
        distance,
        radius: TRANSPORT_CLEARANCE,
    }
}

impl Carrier {
    /// Carrier without probes; `ln(t_i − t_j)` start on the principal branch.
    pub fn new(mats: [Mat2; 4], times: [Cx; 4], ln_tau: Cx) -> Result<Self> {
        check_times(&times)?;
        Ok(Carrier {
            times,
            mats,
            ln_tau,
            ln_tt: PAIRS.map(|(i, j)| (times[i] - times[j]).ln()),
            probes: Vec::new(),
        })
    }

    pub fn from_state(s: &SchlesingerState) -> Result<Self> {
        Self::new(s.mats, s.times(), Cx::default())
    }

    /// Adds a probe at `x` with `Φ(x) = I` and principal logarithms.
    pub fn with_probe(mut self, x: Cx) -> Result<Self> {
        for t in self.times {
            if (x - t).norm() < TRANSPORT_CLEARANCE {
                return Err(LabError::PoleEvaluation(format!("probe at {x} sits on pole {t}")));
            }
        }
        self.probes.push(Probe {
            x,
            phi: Mat2::identity(),
            ln_d: self.times.map(|t| (x - t).ln()),
        });
        Ok(self)
    }

    /// Appends a copy of probe `k`.
    pub fn duplicate_probe(mut self, k: usize) -> Self {
        let p = self.probes[k];
        self.probes.push(p);
        self
    }

    /// Keeps only the listed probes, in the listed order.
    pub fn select_probes(mut self, keep: &[usize]) -> Self {
        self.probes = keep.iter().map(|&k| self.probes[k]).collect();
        self
    }

    pub fn t12(&self) -> (Cx, Cx) {
        (self.times[0], self.times[1])
    }

    fn pack(&self) -> Vec<Cx> {
        let mut y = Vec::with_capacity(23 + 8 * self.probes.len());
        for m in &self.mats {
            y.extend(m.entries());
        }
        y.push(self.ln_tau);
        y.extend(self.ln_tt);
        for p in &self.probes {
            y.extend(p.phi.entries());
            y.extend(p.ln_d);
        }
        y
    }

    fn unpack(&self, y: &[Cx], times: [Cx; 4], xs: &[Cx]) -> Carrier {
        let mats = std::array::from_fn(|i| Mat2::read_from(&y[4 * i..4 * i + 4]));
        let ln_tt = std::array::from_fn(|k| y[17 + k]);
        let probes = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let o = 23 + 8 * k;
                Probe {
                    x,
                    phi: Mat2::read_from(&y[o..o + 4]),
                    ln_d: std::array::from_fn(|j| y[o + 4 + j]),
                }
            })
            .collect();
        Carrier {
            times,
            mats,
            ln_tau: y[16],
            ln_tt,
            probes,
        }
    }

    fn probe_xs(&self) -> Vec<Cx> {
        self.probes.iter().map(|p| p.x).collect()
    }

    /// Moves all four poles along the straight segment to `target`, keeping
    /// the probes fixed in `x`.
    pub fn flow_times(&self, target: [Cx; 4], opts: &OdeOptions) -> Result<Carrier> {
        if target == self.times {
            return Ok(self.clone());
        }
        check_times(&target)?;
        let t0 = self.times;
        let dt: [Cx; 4] = std::array::from_fn(|i| target[i] - t0[i]);
        for (i, j) in PAIRS {
            let d = min_on_segment(t0[i] - t0[j], target[i] - target[j]);
            if d < TRANSPORT_CLEARANCE {
                return Err(clearance_error(format!("t{} = t{}", i + 1, j + 1), d));
            }
        }
        let xs = self.probe_xs();
        for &x in &xs {
            for k in 0..4 {
                let d = min_on_segment(x - t0[k], x - target[k]);
                if d < TRANSPORT_CLEARANCE {
                    return Err(clearance_error(format!("x = t{}", k + 1), d));
                }
            }
        }
        let n_probes = xs.len();
        let at = |s: f64| -> [Cx; 4] { std::array::from_fn(|i| t0[i] + dt[i] * s) };
        let (out, _) = integrate_unit(
            |s, y, dy| {
                let times = at(s);
                let mats: [Mat2; 4] = std::array::from_fn(|i| Mat2::read_from(&y[4 * i..4 * i + 4]));
                let rhs = schlesinger_rhs4(&mats, &times)?;
                for j in 0..4 {
                    let mut d = Mat2::zero();
                    for i in 0..4 {
                        d += rhs[i][j] * dt[i];
                    }
                    d.write_to(&mut dy[4 * j..4 * j + 4]);
                }
                let tau = tau_logderiv4(&mats, &times)?;
                dy[16] = (0..4).map(|i| tau[i] * dt[i]).sum();
                for (k, (i, j)) in PAIRS.iter().enumerate() {
                    dy[17 + k] = (dt[*i] - dt[*j]) / (times[*i] - times[*j]);
                }
                for (p, &x) in xs.iter().enumerate().take(n_probes) {
                    let o = 23 + 8 * p;
                    let phi = Mat2::read_from(&y[o..o + 4]);
                    let mut gen = Mat2::zero();
                    for i in 0..4 {
                        let w = dt[i] / (x - times[i]);
                        gen -= mats[i] * w;
                        dy[o + 4 + i] = -w;
                    }
                    (gen * phi).write_to(&mut dy[o..o + 4]);
                }
                Ok(())
            },
            &self.pack(),
            &[1.0],
            opts,
            |s| at(s).to_vec(),
        )?;
        Ok(self.unpack(&out[0], target, &xs))
    }

    /// Moves probe `k` along the straight segment to `target` at fixed times.
    pub fn move_probe(&self, k: usize, target: Cx, opts: &OdeOptions) -> Result<Carrier> {
        let from = self.probes[k].x;
        if target == from {
            return Ok(self.clone());
        }
        let times = self.times;
        for (i, t) in times.iter().enumerate() {
            let d = min_on_segment(from - t, target - t);
            if d < TRANSPORT_CLEARANCE {
                return Err(clearance_error(format!("x = t{}", i + 1), d));
            }
        }
        let dx = target - from;
        let (out, _) = integrate_unit(
            |s, y, dy| {
                let x = from + dx * s;
                let a = connection_at(&self.mats, &times, x)?;
                let phi = Mat2::read_from(&y[0..4]);
                (a * phi * dx).write_to(&mut dy[0..4]);
                for i in 0..4 {
                    dy[4 + i] = dx / (x - times[i]);
                }
                Ok(())
            },
            &{
                let p = &self.probes[k];
                let mut y = p.phi.entries().to_vec();
                y.extend(p.ln_d);
                y
            },
            &[1.0],
            opts,
            |s| vec![from + dx * s],
        )?;
        let mut c = self.clone();
        c.probes[k] = Probe {
            x: target,
            phi: Mat2::read_from(&out[0][0..4]),
            ln_d: std::array::from_fn(|i| out[0][4 + i]),
        };
        Ok(c)
    }

    /// Moves probe `k` through the waypoints of `path` (which must start at the probe).
    pub fn move_probe_along(&self, k: usize, path: &XPath, opts: &OdeOptions) -> Result<Carrier> {
        if (path.start()[0] - self.probes[k].x).norm() > 1e-14 {
            return Err(LabError::ConfigInvalid(format!(
                "x path starts at {} but the probe is at {}",
                path.start()[0],
                self.probes[k].x
            )));
        }
        let mut c = self.clone();
        for (_, b) in path.segments() {
            c = c.move_probe(k, b[0], opts)?;
        }
        Ok(c)
    }

    /// `M = τ·Φ(x_i)⁻¹·Φ(x_j)` between probes `i` and `j`.
    pub fn m_matrix(&self, i: usize, j: usize) -> Result<Mat2> {
        let (pi, pj) = (&self.probes[i], &self.probes[j]);
        let det = pi.phi.det();
        if det.norm() < 1e-12 {
            return Err(LabError::NearSingularPhi {
                x: pi.x,
                det: det.norm(),
            });
        }
        let inv = pi.phi.adjugate() * (Cx::new(1.0, 0.0) / det);
        Ok(inv * pj.phi * self.ln_tau.exp())
    }

    /// The Schlesinger state at this carrier's times, when `t3 = 1`, `t4 = 0`.
    pub fn state(&self, norm: Normalization, theta: ThetaGO) -> Result<SchlesingerState> {
        if (self.times[2] - 1.0).norm() > 0.0 || self.times[3].norm() > 0.0 {
            return Err(LabError::InvariantViolated(
                "state requested away from t3 = 1, t4 = 0".into(),
            ));
        }
        SchlesingerState::new(self.times[0], self.times[1], self.mats, norm, theta)
    }
}

/// One sample of the time path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t: (Cx, Cx),
    pub ln_tau: Cx,
    /// Gauge exponent `S(t)` on the branch continued from the base time.
    pub s_gauge: Cx,
    /// Carrier with a single probe at the base point.
    pub carrier: Carrier,
}

/// `Φ` at one cached point of the `x` path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSample {
    pub slice: usize,
    pub x: Cx,
    pub phi: Mat2,
}

/// Fundamental solution normalized by `Φ(base_x; base_t) = I`, sampled along
/// a time path and (at each time sample) along an `x` path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub base_x: Cx,
    pub base_t: (Cx, Cx),
    pub theta: ThetaGO,
    pub slices: Vec<TimeSlice>,
    pub phi_cache: Vec<PhiSample>,
    pub opts: OdeOptions,
}

/// `S = Σ_{i<j} (θ_iθ_j/2)·ln(t_i − t_j)` on the branch carried by `ln_tt`.
pub fn gauge_exponent(theta: &[Cx; 4], ln_tt: &[Cx; 6]) -> Cx {
    PAIRS
        .iter()
        .zip(ln_tt)
        .map(|((i, j), l)| theta[*i] * theta[*j] / 2.0 * l)
        .sum()
}

impl Frame {
    /// Transports `Φ` from `(x_path.start(), t_path.start())`, first along
    /// the time path at the base point, then along `x_path` at every time
    /// sample. `s` must be B-normalized and sit at the start of `t_path`.
    pub fn build(s: &SchlesingerState, x_path: &XPath, t_path: &TPath, opts: &OdeOptions) -> Result<Frame> {
        s.require(Normalization::B)?;
        let t0 = t_path.start();
        if (t0[0] - s.t1).norm() > 1e-14 || (t0[1] - s.t2).norm() > 1e-14 {
            return Err(LabError::ConfigInvalid(
                "time path does not start at the state's times".into(),
            ));
        }
        let base_x = x_path.start()[0];
        let mut c = Carrier::from_state(s)?.with_probe(base_x)?;
        let n = opts.samples_per_segment.max(1);
        let theta = s.theta;
        let slice = |c: &Carrier| TimeSlice {
            t: c.t12(),
            ln_tau: c.ln_tau,
            s_gauge: gauge_exponent(&theta.theta, &c.ln_tt),
            carrier: c.clone(),
        };
        let mut slices = vec![slice(&c)];
        for (a, b) in t_path.segments() {
            for k in 1..=n {
                let f = k as f64 / n as f64;
                let t1 = a[0] + (b[0] - a[0]) * f;
                let t2 = a[1] + (b[1] - a[1]) * f;
                c = c.flow_times([t1, t2, c.times[2], c.times[3]], opts)?;
                slices.push(slice(&c));
            }
        }
        let mut phi_cache = Vec::new();
        for (i, sl) in slices.iter().enumerate() {
            let mut p = sl.carrier.clone();
            phi_cache.push(PhiSample {
                slice: i,
                x: base_x,
                phi: p.probes[0].phi,
            });
            for (_, b) in x_path.segments() {
                p = p.move_probe(0, b[0], opts)?;
                phi_cache.push(PhiSample {
                    slice: i,
                    x: b[0],
                    phi: p.probes[0].phi,
                });
            }
        }
        Ok(Frame {
            base_x,
            base_t: (t0[0], t0[1]),
            theta,
            slices,
            phi_cache,
            opts: *opts,
        })
    }

    pub fn last_slice(&self) -> usize {
        self.slices.len() - 1
    }

    /// Carrier at time slice `k` with probes at `x` (index 0) and `y`
    /// (index 1), each reached along the straight segment from the base point.
    pub fn patch(&self, k: usize, x: Cx, y: Cx) -> Result<Carrier> {
        let c = self.slices[k].carrier.clone().duplicate_probe(0);
        let c = c.move_probe(0, x, &self.opts)?;
        let c = c.move_probe(1, y, &self.opts)?;
        Ok(c)
    }

    /// Carrier at time slice `k` with one probe at `x`.
    pub fn probe(&self, k: usize, x: Cx) -> Result<Carrier> {
        self.slices[k].carrier.move_probe(0, x, &self.opts)
    }

    /// `M(x, y) = τ·Φ⁻¹(x)Φ(y)` at slice `k`.
    pub fn build_m(&self, k: usize, x: Cx, y: Cx) -> Result<Mat2> {
        self.patch(k, x, y)?.m_matrix(0, 1)
    }
}

/// Builds a frame; see [`Frame::build`].
pub fn transport_phi(s: &SchlesingerState, x_path: &XPath, t_path: &TPath, opts: &OdeOptions) -> Result<Frame> {
    Frame::build(s, x_path, t_path, opts)
}

/// Carries probe `k` around the rectangle with corners `(x, t)`, `(x + dx, t)`,
/// `(x + dx, t + dt·e_i)`, `(x, t + dt·e_i)` and returns the monodromy
/// `Φ_end·Φ_start⁻¹`.
pub fn rectangle_loop(c: &Carrier, k: usize, dx: Cx, i: usize, dt: Cx, opts: &OdeOptions) -> Result<Mat2> {
    let x0 = c.probes[k].x;
    let t0 = c.times;
    let mut t1 = t0;
    t1[i] += dt;
    let c1 = c.move_probe(k, x0 + dx, opts)?;
    let c2 = c1.flow_times(t1, opts)?;
    let c3 = c2.move_probe(k, x0, opts)?;
    let c4 = c3.flow_times(t0, opts)?;
    Ok(c4.probes[k].phi * c.probes[k].phi.inverse()?)
}

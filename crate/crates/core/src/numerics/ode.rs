//! Adaptive Dormand–Prince 5(4) integration of complex-valued systems along
//! polylines in one or more complex parameters.
//!
//! Every straight segment `a → b` is parameterized as `z(s) = a + s·(b − a)`
//! with `s ∈ [0, 1]`; the caller's field receives the point and the tangent
//! `b − a` and returns the directional derivative `dy/ds`. For a system in
//! several times `t_k` with compatible flows `F_k` this is `Σ (b_k − a_k)·F_k`.

use serde::{Deserialize, Serialize};

use super::{Cx, PathPlan};
use crate::error::{LabError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrator tolerances and budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Maximum number of attempted steps per segment.
    pub max_steps: usize,
    /// Number of equally spaced output points per segment (the segment end is always one).
    pub samples_per_segment: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 500_000,
            samples_per_segment: 1,
        }
    }
}

impl OdeOptions {
    pub fn with_samples(mut self, samples_per_segment: usize) -> Self {
        self.samples_per_segment = samples_per_segment.max(1);
        self
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl OdeStats {
    fn absorb(&mut self, o: OdeStats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint<const N: usize> {
    pub at: [Cx; N],
    pub state: Vec<Cx>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub points: Vec<TrajectoryPoint<N>>,
    pub stats: OdeStats,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> &TrajectoryPoint<N> {
        self.points.last().expect("trajectory has at least the initial point")
    }

    pub fn first(&self) -> &TrajectoryPoint<N> {
        &self.points[0]
    }
}

fn weighted_rms(err: &[Cx], y0: &[Cx], y1: &[Cx], opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn all_finite(v: &[Cx]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Integrates `dy/ds = field(s, y)` from `s = 0`, returning the state at every
/// requested output parameter. Outputs must be increasing and lie in `(0, 1]`;
/// steps are shortened to land on them exactly.
pub fn integrate_unit<F>(
    mut field: F,
    y0: &[Cx],
    outputs: &[f64],
    opts: &OdeOptions,
    location: impl Fn(f64) -> Vec<Cx>,
) -> Result<(Vec<Vec<Cx>>, OdeStats)>
where
    F: FnMut(f64, &[Cx], &mut [Cx]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Cx>> = vec![vec![Cx::default(); n]; 7];
    let mut tmp = vec![Cx::default(); n];
    let mut y_new = vec![Cx::default(); n];
    let mut err = vec![Cx::default(); n];
    let mut results = Vec::with_capacity(outputs.len());

    field(0.0, &y, &mut k[0])?;
    stats.evaluations += 1;
    if !all_finite(&k[0]) {
        return Err(LabError::SingularityApproach {
            location: location(0.0),
        });
    }

    // Initial step from the first-derivative scale.
    let d0 = weighted_rms(&y, &y, &y, opts);
    let d1 = weighted_rms(&k[0], &y, &y, opts);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-3
    } else {
        (0.01 * d0 / d1).min(1.0)
    };
    h = h.max(1e-6);

    let mut s = 0.0;
    let h_min = 1e-13;
    let mut attempts = 0usize;
    let mut just_rejected = false;

    for &target in outputs {
        while target - s > 1e-15 {
            attempts += 1;
            if attempts > opts.max_steps {
                return Err(LabError::StepBudgetExhausted {
                    max_steps: opts.max_steps,
                    location: location(s),
                });
            }
            let mut step = h.min(target - s);
            let landing = step >= target - s - 1e-15;
            if landing {
                step = target - s;
            }

            let mut finite = true;
            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = Cx::default();
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        let a = A[stage][j];
                        if a != 0.0 {
                            acc += kj[i] * a;
                        }
                    }
                    tmp[i] = y[i] + acc * step;
                }
                let (before, after) = k.split_at_mut(stage);
                let _ = before;
                if stage == 6 {
                    y_new.copy_from_slice(&tmp);
                }
                match field(s + C[stage] * step, &tmp, &mut after[0]) {
                    Ok(()) => {}
                    Err(e) if e.is_singularity() => {
                        finite = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
                stats.evaluations += 1;
                if !all_finite(&after[0]) {
                    finite = false;
                    break;
                }
            }

            let err_norm = if finite {
                for i in 0..n {
                    let mut acc = Cx::default();
                    for (j, kj) in k.iter().enumerate() {
                        if E[j] != 0.0 {
                            acc += kj[i] * E[j];
                        }
                    }
                    err[i] = acc * step;
                }
                weighted_rms(&err, &y, &y_new, opts)
            } else {
                f64::INFINITY
            };

            if err_norm <= 1.0 {
                stats.accepted += 1;
                s = if landing { target } else { s + step };
                std::mem::swap(&mut y, &mut y_new);
                let last = k[6].clone();
                k[0] = last;
                let fac = if err_norm == 0.0 {
                    5.0
                } else {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                let grown = step * if just_rejected { fac.min(1.0) } else { fac };
                // A step clipped to land on an output must not shrink the next one.
                h = if landing { h.max(grown) } else { grown };
                just_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = if err_norm.is_finite() {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h = step * fac;
                just_rejected = true;
                if h < h_min {
                    return Err(LabError::SingularityApproach {
                        location: location(s),
                    });
                }
            }
        }
        results.push(y.clone());
    }
    Ok((results, stats))
}

/// Integrates along a polyline, recording the state at the start, at
/// `samples_per_segment` equally spaced points of every segment, and at every
/// waypoint.
///
/// `field(point, tangent, y, dy)` must write `dy/ds` for the segment tangent.
pub fn ode_integrate<const N: usize, F>(
    mut field: F,
    y0: &[Cx],
    path: &PathPlan<N>,
    opts: &OdeOptions,
) -> Result<Trajectory<N>>
where
    F: FnMut(&[Cx; N], &[Cx; N], &[Cx], &mut [Cx]) -> Result<()>,
{
    let mut points = vec![TrajectoryPoint {
        at: path.start(),
        state: y0.to_vec(),
    }];
    let mut stats = OdeStats::default();
    let samples = opts.samples_per_segment.max(1);
    let outputs: Vec<f64> = (1..=samples).map(|i| i as f64 / samples as f64).collect();
    let mut y = y0.to_vec();
    for (a, b) in path.segments() {
        let mut tangent = [Cx::default(); N];
        for k in 0..N {
            tangent[k] = b[k] - a[k];
        }
        let at = |s: f64| {
            let mut p = [Cx::default(); N];
            for k in 0..N {
                p[k] = a[k] + tangent[k] * s;
            }
            p
        };
        let (states, st) = integrate_unit(
            |s, y, dy| field(&at(s), &tangent, y, dy),
            &y,
            &outputs,
            opts,
            |s| at(s).to_vec(),
        )?;
        stats.absorb(st);
        for (i, state) in states.into_iter().enumerate() {
            let p = if i + 1 == samples { *b } else { at(outputs[i]) };
            points.push(TrajectoryPoint { at: p, state });
        }
        y = points.last().unwrap().state.clone();
    }
    Ok(Trajectory { points, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::XPath;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn zero_field_gives_constant_trajectory() {
        let path = XPath::new(vec![[c(0.0, 0.0)], [c(1.0, 2.0)], [c(-1.0, 0.5)]], 0.1);
        let y0 = [c(0.3, -0.7), c(2.0, 1.0)];
        let tr = ode_integrate(
            |_, _, _, dy: &mut [Cx]| {
                dy.fill(Cx::default());
                Ok(())
            },
            &y0,
            &path,
            &OdeOptions::default().with_samples(3),
        )
        .unwrap();
        assert_eq!(tr.points.len(), 7);
        for p in &tr.points {
            assert_eq!(p.state, y0.to_vec());
        }
    }

    #[test]
    fn exponential_growth_along_unit_segment() {
        let opts = OdeOptions::default();
        let path = XPath::segment([c(0.0, 0.0)], [c(1.0, 0.0)], 0.1);
        let y0 = c(0.5, 0.25);
        let tr = ode_integrate(
            |_, dz: &[Cx; 1], y: &[Cx], dy: &mut [Cx]| {
                dy[0] = dz[0] * y[0];
                Ok(())
            },
            &[y0],
            &path,
            &opts,
        )
        .unwrap();
        let exact = y0 * std::f64::consts::E;
        let rel = (tr.last().state[0] - exact).norm() / exact.norm();
        assert!(rel < opts.rtol * 100.0, "relative error {rel:e}");
    }

    #[test]
    fn loop_around_simple_pole_picks_up_two_pi_i() {
        // d/dz log(z − z*) = 1/(z − z*) integrated once around z*.
        let zs = c(0.3, -0.2);
        let r = 0.8;
        let corners: Vec<[Cx; 1]> = [(1.0, 0.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (1.0, 0.0)]
            .iter()
            .map(|&(a, b)| [zs + c(a * r, b * r)])
            .collect();
        let path = XPath::new(corners, 0.1);
        let tr = ode_integrate(
            |z: &[Cx; 1], dz: &[Cx; 1], _y: &[Cx], dy: &mut [Cx]| {
                dy[0] = dz[0] / (z[0] - zs);
                Ok(())
            },
            &[Cx::default()],
            &path,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((tr.last().state[0] - c(0.0, 2.0 * PI)).norm() < 1e-10);
    }

    #[test]
    fn blow_up_is_reported_as_singularity() {
        // y' = y² from y(0) = 1 blows up at s = 1.
        let path = XPath::segment([c(0.0, 0.0)], [c(2.0, 0.0)], 0.1);
        let err = ode_integrate(
            |_, dz: &[Cx; 1], y: &[Cx], dy: &mut [Cx]| {
                dy[0] = dz[0] * y[0] * y[0] * 0.5;
                Ok(())
            },
            &[c(1.0, 0.0)],
            &path,
            &OdeOptions::default(),
        )
        .unwrap_err();
        match err {
            LabError::SingularityApproach { location } | LabError::StepBudgetExhausted { location, .. } => {
                assert!((location[0].re - 2.0).abs() < 1e-3, "{location:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

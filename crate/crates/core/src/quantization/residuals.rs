//! Finite-difference residuals of the linear PDEs satisfied by `Y` and `V`,
//! and of the scalar second-order equation satisfied by the first row of `Z`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::gauge::{gauge_to_y, v_from_y, zeta_eta_inverse, zeta_eta_map, AlphaBeta, GaugeLogs};
use super::transport::{Carrier, Frame};
use crate::error::{LabError, Result};
use crate::garnier_okamoto::{extract_go, garx_coefficients, hamiltonian_k, GOState};
use crate::numerics::{fd_derivative, fd_second_derivative, re, Cx, FdScheme, Mat2, OdeOptions};
use crate::schlesinger::{shift_normalization, Normalization, ShiftDirection, ThetaGO};

/// Finite-difference schemes for first and for second (or mixed) derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdPlan {
    pub first: FdScheme,
    pub second: FdScheme,
}

impl Default for FdPlan {
    fn default() -> Self {
        FdPlan {
            first: FdScheme::default(),
            second: FdScheme::second_derivative_default(),
        }
    }
}

impl FdPlan {
    pub fn validate(&self) -> Result<()> {
        self.first.validate()?;
        self.second.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub x: Cx,
    pub y: Cx,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub normalization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation_id: String,
    pub sample_points: Vec<ResidualPoint>,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    /// Scale at the point with the largest relative residual.
    pub normalization: f64,
    pub fd_scheme: FdPlan,
}

impl ResidualReport {
    pub fn from_points(equation_id: &str, sample_points: Vec<ResidualPoint>, plan: &FdPlan) -> Result<Self> {
        let mut max_abs = 0.0f64;
        let mut worst: Option<&ResidualPoint> = None;
        for p in &sample_points {
            if !p.abs_residual.is_finite() || !p.rel_residual.is_finite() {
                return Err(LabError::InvariantViolated(format!(
                    "{equation_id}: non-finite residual at ({}, {})",
                    p.x, p.y
                )));
            }
            max_abs = max_abs.max(p.abs_residual);
            if worst.is_none_or(|w| p.rel_residual > w.rel_residual) {
                worst = Some(p);
            }
        }
        Ok(ResidualReport {
            equation_id: equation_id.to_string(),
            max_abs_residual: max_abs,
            max_rel_residual: worst.map_or(0.0, |w| w.rel_residual),
            normalization: worst.map_or(0.0, |w| w.normalization),
            sample_points,
            fd_scheme: *plan,
        })
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_rel_residual <= rel_tol
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    re_x: f64,
    im_x: f64,
    re_y: f64,
    im_y: f64,
    equation_id: &'a str,
    abs_residual: f64,
    rel_residual: f64,
}

/// Per-point residuals of several reports as CSV.
pub fn write_residual_csv<W: Write>(reports: &[ResidualReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for p in &r.sample_points {
            w.serialize(CsvRow {
                re_x: p.x.re,
                im_x: p.x.im,
                re_y: p.y.re,
                im_y: p.y.im,
                equation_id: &r.equation_id,
                abs_residual: p.abs_residual,
                rel_residual: p.rel_residual,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Residual of `Σ terms = 0` entry by entry; returns the entry with the
/// largest relative residual as `(abs, rel, scale)`, the scale being the
/// largest single term in that entry.
pub fn entrywise_residual(terms: &[Mat2]) -> (f64, f64, f64) {
    let mut best = (0.0, -1.0, 0.0);
    for e in 0..4 {
        let vals: Vec<Cx> = terms.iter().map(|m| m.entries()[e]).collect();
        let r = scalar_residual(&vals);
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

pub fn scalar_residual(terms: &[Cx]) -> (f64, f64, f64) {
    let abs = terms.iter().sum::<Cx>().norm();
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    (abs, abs / (scale + 1e-300), scale)
}

fn point(x: Cx, y: Cx, (abs, rel, scale): (f64, f64, f64)) -> ResidualPoint {
    ResidualPoint {
        x,
        y,
        abs_residual: abs,
        rel_residual: rel,
        normalization: scale,
    }
}

/// Value and derivatives of `Y` at one point `(x, y, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YJet {
    pub val: Mat2,
    pub dx: Mat2,
    pub dy: Mat2,
    pub dxx: Mat2,
    pub dyy: Mat2,
    pub dt: [Mat2; 4],
}

/// Terms of the two second-order equations and the two first-order equations
/// (translation and dilation), each written as `Σ terms = 0`.
pub fn bpz_terms(j: &YJet, x: Cx, y: Cx, times: &[Cx; 4], theta: &ThetaGO) -> [Vec<Mat2>; 4] {
    let th = &theta.theta;
    let inv = re(1.0) / (x - y);
    let mut ex = Vec::new();
    let mut ey = Vec::new();
    for i in 0..4 {
        ex.push(j.dt[i] * (re(1.0) / (x - times[i])));
        ey.push(j.dt[i] * (re(1.0) / (y - times[i])));
    }
    let cx: Cx = (0..4).map(|i| th[i] / (x - times[i])).sum();
    let cy: Cx = (0..4).map(|i| th[i] / (y - times[i])).sum();
    ex.extend([-j.dxx, -(j.dx * inv), j.dy * inv, -(j.dx * cx)]);
    ey.extend([-j.dyy, -(j.dx * inv), j.dy * inv, -(j.dy * cy)]);
    let mut tr: Vec<Mat2> = j.dt.to_vec();
    tr.extend([j.dx, j.dy]);
    let mut dil: Vec<Mat2> = (0..4).map(|i| j.dt[i] * times[i]).collect();
    dil.extend([j.dx * x, j.dy * y, -(j.val * theta.bpz_lambda)]);
    [ex, ey, tr, dil]
}

/// The bracketed operator `Y'' + Y'·Σ c_k/(z − t_k) − λ/(z(z − 1))·Y` at
/// `z`, split into its three terms.
fn kevol_bracket(d2: Mat2, d1: Mat2, val: Mat2, z: Cx, times: &[Cx; 4], c: &[Cx; 4], lambda: Cx) -> [Mat2; 3] {
    let s: Cx = (0..4).map(|k| c[k] / (z - times[k])).sum();
    [d2, d1 * s, -(val * (lambda / (z * (z - 1.0))))]
}

/// Terms of the evolution equation in `t_{i+1}` (`i ∈ {0, 1}`), as `Σ = 0`.
pub fn kevol_terms(i: usize, j: &YJet, x: Cx, y: Cx, times: &[Cx; 4], theta: &ThetaGO) -> Vec<Mat2> {
    let th = &theta.theta;
    let (ti, tj) = (times[i], times[1 - i]);
    let mut c = [th[0] + 1.0, th[1] + 1.0, th[2] + 1.0, th[3] + 1.0];
    c[i] = th[i];
    let lambda = theta.bpz_lambda;
    let px = (x - ti) * (y - ti) * (x - tj) * (x - 1.0) * x / (y - x);
    let py = (x - ti) * (y - ti) * (y - tj) * (y - 1.0) * y / (y - x);
    let mut out = vec![j.dt[i] * (ti * (ti - 1.0) * (ti - tj))];
    for m in kevol_bracket(j.dxx, j.dx, j.val, x, times, &c, lambda) {
        out.push(-(m * px));
    }
    for m in kevol_bracket(j.dyy, j.dy, j.val, y, times, &c, lambda) {
        out.push(m * py);
    }
    out
}

/// `Y_{t_i}` as given by the right-hand side of the evolution equation.
fn kevol_rhs(i: usize, j: &YJet, x: Cx, y: Cx, times: &[Cx; 4], theta: &ThetaGO) -> Mat2 {
    let (ti, tj) = (times[i], times[1 - i]);
    let mut jj = *j;
    jj.dt[i] = Mat2::zero();
    let rest: Mat2 = kevol_terms(i, &jj, x, y, times, theta).into_iter().sum();
    -(rest * (re(1.0) / (ti * (ti - 1.0) * (ti - tj))))
}

/// Value and derivatives of `V` at one point `(ζ, η, t1, t2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VJet {
    pub val: Mat2,
    pub dz: Mat2,
    pub de: Mat2,
    pub dzz: Mat2,
    pub dze: Mat2,
    pub dee: Mat2,
    pub dt: [Mat2; 2],
}

/// Terms of the quantized polynomial equation in `t_{i+1}`, as `Σ = 0`.
/// The `θ_k` are the exponents of the Schlesinger picture.
pub fn quantized_pg_terms(
    i: usize,
    v: &VJet,
    zeta: Cx,
    eta: Cx,
    t1: Cx,
    t2: Cx,
    theta: &ThetaGO,
    ab: &AlphaBeta,
) -> Vec<Mat2> {
    let [th1, th2, th3, th4] = theta.theta;
    let (a, b) = (ab.alpha, ab.beta);
    let (z, e) = (zeta, eta);
    let d = t1 - t2;
    let ze = z * e / d;
    let c3 = th3 + b * 2.0 - 1.0;
    if i == 0 {
        let czz = z * z * z - (t1 + 1.0) * z * z + t1 * z - t1 * (t1 - 1.0) * ze;
        let cze = z * z * e * 2.0 + t1 * (t2 - 1.0) * ze * 2.0;
        let cee = z * e * e - t2 * (t1 - 1.0) * ze;
        let cz = -c3 * z * z + t1 * z * (th2 + th3 + th4 + a * 2.0 + b * 2.0) - z * (th1 + th2 + th4 + a * 2.0 + 2.0)
            + t1 * (th1 + 1.0)
            - (th1 + 1.0) * t1 * (t1 - 1.0) * e / d
            + (th2 + 1.0) * t2 * (t1 - 1.0) * z / d;
        let ce = -c3 * z * e + (th1 + 1.0) * t1 * (t2 - 1.0) * e / d - (th2 + 1.0) * t2 * (t1 - 1.0) * z / d;
        let c0 = b * (b + th3) * z + (t1 - 1.0) * th1 * a + t1 * th1 * b;
        vec![
            v.dt[0] * (t1 * (t1 - 1.0)),
            -(v.dzz * czz),
            -(v.dze * cze),
            -(v.dee * cee),
            -(v.dz * cz),
            -(v.de * ce),
            -(v.val * c0),
        ]
    } else {
        let cee = e * e * e - (t2 + 1.0) * e * e + t2 * e + t2 * (t2 - 1.0) * ze;
        let cze = e * e * z * 2.0 - t2 * (t1 - 1.0) * ze * 2.0;
        let czz = e * z * z + t1 * (t2 - 1.0) * ze;
        let ce = -c3 * e * e + t2 * e * (th1 + th3 + th4 + a * 2.0 + b * 2.0) - e * (th1 + th2 + th4 + a * 2.0 + 2.0)
            + t2 * (th2 + 1.0)
            + (th2 + 1.0) * t2 * (t2 - 1.0) * z / d
            - (th1 + 1.0) * t1 * (t2 - 1.0) * e / d;
        let cz = -c3 * z * e - (th2 + 1.0) * t2 * (t1 - 1.0) * z / d + (th1 + 1.0) * t1 * (t2 - 1.0) * e / d;
        let c0 = b * (b + th3) * e + (t2 - 1.0) * th2 * a + t2 * th2 * b;
        vec![
            v.dt[1] * (t2 * (t2 - 1.0)),
            -(v.dee * cee),
            -(v.dze * cze),
            -(v.dzz * czz),
            -(v.de * ce),
            -(v.dz * cz),
            -(v.val * c0),
        ]
    }
}

fn y_value(c: &Carrier, theta: &ThetaGO) -> Result<Mat2> {
    gauge_to_y(c.m_matrix(0, 1)?, theta, &GaugeLogs::from_carrier(c, 0, 1))
}

/// Derivatives of `Y` at the carrier's probes 0 (`x`) and 1 (`y`). Time
/// derivatives are taken for the first `n_times` poles; the remaining ones
/// are left at zero. Every stencil point is reached from the carrier by a
/// short transport, so the stencil sees one smooth function.
pub fn y_jet(c: &Carrier, theta: &ThetaGO, plan: &FdPlan, opts: &OdeOptions, n_times: usize) -> Result<YJet> {
    let (x0, y0) = (c.probes[0].x, c.probes[1].x);
    let along = |k: usize| move |z: Cx| y_value(&c.move_probe(k, z, opts)?, theta);
    let mut dt = [Mat2::zero(); 4];
    for (i, d) in dt.iter_mut().enumerate().take(n_times) {
        *d = fd_derivative(
            |z| {
                let mut t = c.times;
                t[i] = z;
                y_value(&c.flow_times(t, opts)?, theta)
            },
            c.times[i],
            &plan.first,
        )?;
    }
    Ok(YJet {
        val: y_value(c, theta)?,
        dx: fd_derivative(along(0), x0, &plan.first)?,
        dy: fd_derivative(along(1), y0, &plan.first)?,
        dxx: fd_second_derivative(along(0), x0, &plan.second)?,
        dyy: fd_second_derivative(along(1), y0, &plan.second)?,
        dt,
    })
}

fn y_jets_on_grid(frame: &Frame, k: usize, grid: &[(Cx, Cx)], plan: &FdPlan, n_times: usize) -> Result<Vec<(Carrier, YJet)>> {
    plan.validate()?;
    grid.iter()
        .map(|&(x, y)| {
            let c = frame.patch(k, x, y)?;
            let j = y_jet(&c, &frame.theta, plan, &frame.opts, n_times)?;
            Ok((c, j))
        })
        .collect()
}

pub const BPZ_IDS: [&str; 4] = ["bpz_x", "bpz_y", "translation", "dilation"];
pub const KEVOL_IDS: [&str; 2] = ["evolution_t1", "evolution_t2"];
pub const QPG_IDS: [&str; 2] = ["quantized_pg_t1", "quantized_pg_t2"];

/// The two second-order equations and the two first-order equations for `Y`
/// on `grid` at time slice `k`. Derivatives in `t3`, `t4` re-flow the
/// Schlesinger system with all four poles free.
pub fn bpz_residual(frame: &Frame, k: usize, grid: &[(Cx, Cx)], plan: &FdPlan) -> Result<[ResidualReport; 4]> {
    let jets = y_jets_on_grid(frame, k, grid, plan, 4)?;
    let mut pts: [Vec<ResidualPoint>; 4] = Default::default();
    for ((x, y), (c, j)) in grid.iter().zip(&jets) {
        let terms = bpz_terms(j, *x, *y, &c.times, &frame.theta);
        for e in 0..4 {
            pts[e].push(point(*x, *y, entrywise_residual(&terms[e])));
        }
    }
    let [a, b, c, d] = pts;
    Ok([
        ResidualReport::from_points(BPZ_IDS[0], a, plan)?,
        ResidualReport::from_points(BPZ_IDS[1], b, plan)?,
        ResidualReport::from_points(BPZ_IDS[2], c, plan)?,
        ResidualReport::from_points(BPZ_IDS[3], d, plan)?,
    ])
}

/// The two evolution equations in `t1`, `t2` for `Y` at fixed `t3 = 1`, `t4 = 0`.
pub fn kevol_residual(frame: &Frame, k: usize, grid: &[(Cx, Cx)], plan: &FdPlan) -> Result<[ResidualReport; 2]> {
    let jets = y_jets_on_grid(frame, k, grid, plan, 2)?;
    let mut pts: [Vec<ResidualPoint>; 2] = Default::default();
    for ((x, y), (c, j)) in grid.iter().zip(&jets) {
        for (i, p) in pts.iter_mut().enumerate() {
            p.push(point(*x, *y, entrywise_residual(&kevol_terms(i, j, *x, *y, &c.times, &frame.theta))));
        }
    }
    let [a, b] = pts;
    Ok([
        ResidualReport::from_points(KEVOL_IDS[0], a, plan)?,
        ResidualReport::from_points(KEVOL_IDS[1], b, plan)?,
    ])
}

/// The `x` second-order equation with `Y_{t1}`, `Y_{t2}` taken from the
/// evolution equations and `Y_{t3}`, `Y_{t4}` from the two first-order
/// equations. Uses only `x`, `y` derivatives.
pub fn kevol_bpz_consistency(frame: &Frame, k: usize, grid: &[(Cx, Cx)], plan: &FdPlan) -> Result<ResidualReport> {
    let jets = y_jets_on_grid(frame, k, grid, plan, 0)?;
    let mut pts = Vec::new();
    for ((x, y), (c, j)) in grid.iter().zip(&jets) {
        let (x, y) = (*x, *y);
        let times = c.times;
        let mut jj = *j;
        jj.dt[0] = kevol_rhs(0, j, x, y, &times, &frame.theta);
        jj.dt[1] = kevol_rhs(1, j, x, y, &times, &frame.theta);
        // t3 = 1, t4 = 0: the dilation equation fixes Y_{t3}, translation then Y_{t4}.
        jj.dt[2] = j.val * frame.theta.bpz_lambda - jj.dt[0] * times[0] - jj.dt[1] * times[1] - j.dx * x - j.dy * y;
        jj.dt[3] = -(jj.dt[0] + jj.dt[1] + jj.dt[2] + j.dx + j.dy);
        let [ex, ..] = bpz_terms(&jj, x, y, &times, &frame.theta);
        pts.push(point(x, y, entrywise_residual(&ex)));
    }
    ResidualReport::from_points("evolution_bpz_consistency", pts, plan)
}

/// Evaluates `V` at `(ζ, η, t1, t2)` starting from the carrier, whose probes
/// 0 and 1 sit at `hint`.
fn v_value(c: &Carrier, zeta: Cx, eta: Cx, t: (Cx, Cx), theta: &ThetaGO, ab: &AlphaBeta, opts: &OdeOptions) -> Result<Mat2> {
    let hint = (c.probes[0].x, c.probes[1].x);
    let (x, y) = zeta_eta_inverse(zeta, eta, t.0, t.1, hint)?;
    let moved = c.flow_times([t.0, t.1, c.times[2], c.times[3]], opts)?;
    let moved = moved.move_probe(0, x, opts)?.move_probe(1, y, opts)?;
    let yv = y_value(&moved, theta)?;
    v_from_y(yv, ab, &GaugeLogs::from_carrier(&moved, 0, 1))
}

/// Steps for the `ζ` and `η` stencils such that each moves `(x, y)` about as
/// far as the `x`, `y` stencils of [`y_jet`] do. Near `x = y` the inverse map
/// branches, so fixed steps in `(ζ, η)` would reach across the branch locus.
fn zeta_eta_schemes(x: Cx, y: Cx, t1: Cx, t2: Cx, z0: Cx, e0: Cx, scheme: &FdScheme) -> Result<(FdScheme, FdScheme)> {
    let j = |f: &dyn Fn(Cx) -> Result<(Cx, Cx)>, at: Cx| -> Result<Vec<Cx>> {
        fd_derivative(|u| f(u).map(|(a, b)| vec![a, b]), at, scheme)
    };
    let dx = j(&|u| zeta_eta_map(u, y, t1, t2), x)?;
    let dy = j(&|u| zeta_eta_map(x, u, t1, t2), y)?;
    // Columns of the inverse Jacobian: (∂x/∂ζ, ∂y/∂ζ) and (∂x/∂η, ∂y/∂η).
    let det = dx[0] * dy[1] - dy[0] * dx[1];
    if det.norm() < 1e-300 {
        return Err(LabError::DegenerateJacobian(format!("at x = {x}, y = {y}")));
    }
    let col_z = (dy[1] / det).norm().max((dx[1] / det).norm());
    let col_e = (dy[0] / det).norm().max((dx[0] / det).norm());
    let reach = scheme.step_at(x).max(scheme.step_at(y));
    let fit = |col: f64, at: Cx| scheme.with_step(reach / col / (1.0 + at.norm()));
    Ok((fit(col_z, z0), fit(col_e, e0)))
}

/// Derivatives of `V` at the carrier's point. `ζ`, `η` stencils are
/// inverted to `(x, y)` with the carrier's probes as hint; `t` stencils hold
/// `(ζ, η)` fixed.
pub fn v_jet(c: &Carrier, theta: &ThetaGO, ab: &AlphaBeta, plan: &FdPlan, opts: &OdeOptions) -> Result<(Cx, Cx, VJet)> {
    let (t1, t2) = c.t12();
    let (x0, y0) = (c.probes[0].x, c.probes[1].x);
    let (z0, e0) = zeta_eta_map(x0, y0, t1, t2)?;
    let (z1, e1) = zeta_eta_schemes(x0, y0, t1, t2, z0, e0, &plan.first)?;
    let (z2, e2) = zeta_eta_schemes(x0, y0, t1, t2, z0, e0, &plan.second)?;
    let v = |z: Cx, e: Cx, t: (Cx, Cx)| v_value(c, z, e, t, theta, ab, opts);
    let jet = VJet {
        val: v(z0, e0, (t1, t2))?,
        dz: fd_derivative(|z| v(z, e0, (t1, t2)), z0, &z1)?,
        de: fd_derivative(|e| v(z0, e, (t1, t2)), e0, &e1)?,
        dzz: fd_second_derivative(|z| v(z, e0, (t1, t2)), z0, &z2)?,
        dee: fd_second_derivative(|e| v(z0, e, (t1, t2)), e0, &e2)?,
        dze: fd_derivative(|z| fd_derivative(|e| v(z, e, (t1, t2)), e0, &e2), z0, &z2)?,
        dt: [
            fd_derivative(|t| v(z0, e0, (t, t2)), t1, &plan.first)?,
            fd_derivative(|t| v(z0, e0, (t1, t)), t2, &plan.first)?,
        ],
    };
    Ok((z0, e0, jet))
}

/// The two quantized polynomial equations for `V`. Grid entries are `(x, y)`
/// pairs; each is mapped to `(ζ, η)` and serves as the inversion hint there.
/// Sample points in the report are `(ζ, η)`.
pub fn quantized_pg_residual(
    frame: &Frame,
    k: usize,
    grid: &[(Cx, Cx)],
    ab: &AlphaBeta,
    plan: &FdPlan,
) -> Result<[ResidualReport; 2]> {
    plan.validate()?;
    let mut pts: [Vec<ResidualPoint>; 2] = Default::default();
    for &(x, y) in grid {
        let c = frame.patch(k, x, y)?;
        let (t1, t2) = c.t12();
        let (z, e, jet) = v_jet(&c, &frame.theta, ab, plan, &frame.opts)?;
        for (i, p) in pts.iter_mut().enumerate() {
            let terms = quantized_pg_terms(i, &jet, z, e, t1, t2, &frame.theta, ab);
            p.push(point(z, e, entrywise_residual(&terms)));
        }
    }
    let [a, b] = pts;
    Ok([
        ResidualReport::from_points(QPG_IDS[0], a, plan)?,
        ResidualReport::from_points(QPG_IDS[1], b, plan)?,
    ])
}

/// Garnier–Okamoto data of the Q-shifted state at time slice `k`.
pub fn frame_go_state(frame: &Frame, k: usize) -> Result<GOState> {
    let s = frame.slices[k].carrier.state(Normalization::B, frame.theta)?;
    extract_go(&shift_normalization(&s, ShiftDirection::BtoQ)?)
}

/// `Z = Φ·Π(x − t_i)^{θ_i/2}` at probe 0.
fn z_matrix(c: &Carrier, theta: &ThetaGO) -> Mat2 {
    let p = &c.probes[0];
    let l: Cx = (0..4).map(|i| theta.theta[i] / 2.0 * p.ln_d[i]).sum();
    p.phi * l.exp()
}

/// First row of `Z` and its first two `x`-derivatives at `x`.
fn z_row_jet(frame: &Frame, k: usize, x: Cx, plan: &FdPlan) -> Result<([Cx; 2], [Cx; 2], [Cx; 2])> {
    let c = frame.probe(k, x)?;
    let row = |m: Mat2| vec![m.a11, m.a12];
    let f = |z: Cx| Ok(row(z_matrix(&c.move_probe(0, z, &frame.opts)?, &frame.theta)));
    let v = row(z_matrix(&c, &frame.theta));
    let d1 = fd_derivative(f, x, &plan.first)?;
    let d2 = fd_second_derivative(f, x, &plan.second)?;
    Ok(([v[0], v[1]], [d1[0], d1[1]], [d2[0], d2[1]]))
}

/// The scalar equation `z'' = c1·z' + c0·z` for both columns of the first
/// row of `Z`; reports the worse column per point.
pub fn garx_residual(frame: &Frame, k: usize, g: &GOState, xs: &[Cx], plan: &FdPlan) -> Result<ResidualReport> {
    plan.validate()?;
    let k1 = hamiltonian_k(1, g)?;
    let k2 = hamiltonian_k(2, g)?;
    let mut pts = Vec::new();
    for &x in xs {
        let (c1, c0) = garx_coefficients(g, k1, k2, x)?;
        let (z, dz, dzz) = z_row_jet(frame, k, x, plan)?;
        let mut worst = (0.0, -1.0, 0.0);
        for col in 0..2 {
            let r = scalar_residual(&[dzz[col], -(c1 * dz[col]), -(c0 * z[col])]);
            if r.1 > worst.1 {
                worst = r;
            }
        }
        pts.push(point(x, x, worst));
    }
    ResidualReport::from_points("scalar_ode_x", pts, plan)
}

/// Abel's identity for the two columns: `W = z_a z_b' − z_b z_a'` divided by
/// `Π(x − t_i)^{θ_i − 1}·(x − λ1)(x − λ2)` must be constant in `x`. Residual
/// at each sample is the deviation from the value at the first sample.
pub fn abel_check(frame: &Frame, k: usize, g: &GOState, xs: &[Cx], plan: &FdPlan) -> Result<ResidualReport> {
    plan.validate()?;
    let mut ratios = Vec::new();
    for &x in xs {
        let (z, dz, _) = z_row_jet(frame, k, x, plan)?;
        let w = z[0] * dz[1] - z[1] * dz[0];
        let c = frame.probe(k, x)?;
        let l: Cx = (0..4).map(|i| (frame.theta.theta[i] - 1.0) * c.probes[0].ln_d[i]).sum();
        let abel = l.exp() * (x - g.lambda[0]) * (x - g.lambda[1]);
        ratios.push(w / abel);
    }
    let r0 = *ratios.first().ok_or_else(|| LabError::ConfigInvalid("no sample points".into()))?;
    let pts = xs
        .iter()
        .zip(&ratios)
        .map(|(&x, &r)| point(x, x, scalar_residual(&[r, -r0])))
        .collect();
    ResidualReport::from_points("abel", pts, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::XPath;
    use crate::quantization::gauge::{solve_alpha_beta, AlphaBranch, BetaBranch};
    use crate::schlesinger::{generate_b_state, tau_logderiv4, GenOptions, SchlesingerState};

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn theta4() -> [Cx; 4] {
        [c(0.3, 0.14), c(-0.4, 0.33), c(0.17, -0.2), c(0.29, 0.11)]
    }

    /// Exact jets of `Y` at a point where `Φ(x) = Φ(y) = I`, `τ = 1`, built
    /// from the linear system and the Schlesinger equations by hand.
    fn analytic_jet(b: &[Mat2; 4], times: &[Cx; 4], th: &[Cx; 4], x: Cx, y: Cx) -> YJet {
        let a = |z: Cx| -> Mat2 { (0..4).map(|i| b[i] * (re(1.0) / (z - times[i]))).sum() };
        let ap = |z: Cx| -> Mat2 { (0..4).map(|i| -(b[i] * (re(1.0) / ((z - times[i]) * (z - times[i]))))).sum() };
        let ltau = tau_logderiv4(b, times).unwrap();
        let id = Mat2::identity();
        let (ax, ay) = (a(x), a(y));
        let gx = -ax;
        let gxx = ax * ax - ap(x);
        let gy = ay;
        let gyy = ay * ay + ap(y);
        let gt: [Mat2; 4] = std::array::from_fn(|i| {
            id * ltau[i] + b[i] * (re(1.0) / (x - times[i])) - b[i] * (re(1.0) / (y - times[i]))
        });
        let half: Vec<Cx> = th.iter().map(|t| t / 2.0).collect();
        let lx = re(1.0) / (x - y) + (0..4).map(|i| half[i] / (x - times[i])).sum::<Cx>();
        let lxx = -re(1.0) / ((x - y) * (x - y)) - (0..4).map(|i| half[i] / ((x - times[i]) * (x - times[i]))).sum::<Cx>();
        let ly = -re(1.0) / (x - y) + (0..4).map(|i| half[i] / (y - times[i])).sum::<Cx>();
        let lyy = -re(1.0) / ((x - y) * (x - y)) - (0..4).map(|i| half[i] / ((y - times[i]) * (y - times[i]))).sum::<Cx>();
        let lt: [Cx; 4] = std::array::from_fn(|i| {
            -half[i] * (re(1.0) / (x - times[i]) + re(1.0) / (y - times[i]))
                + (0..4).filter(|&j| j != i).map(|j| th[i] * th[j] / 2.0 / (times[i] - times[j])).sum::<Cx>()
        });
        let (hx, hy) = (-lx, -ly);
        let (hxx, hyy) = (lx * lx - lxx, ly * ly - lyy);
        YJet {
            val: id,
            dx: gx + id * hx,
            dy: gy + id * hy,
            dxx: gxx + gx * (hx * 2.0) + id * hxx,
            dyy: gyy + gy * (hy * 2.0) + id * hyy,
            dt: std::array::from_fn(|i| gt[i] - id * lt[i]),
        }
    }

    fn generic() -> (SchlesingerState, [Cx; 4]) {
        let s = generate_b_state(theta4(), &GenOptions::default(), 11).unwrap().state;
        let t = s.times();
        (s, t)
    }

    #[test]
    fn term_builders_vanish_on_exact_jets() {
        let (s, times) = generic();
        let (x, y) = (c(1.4, 0.5), c(-0.75, -0.8));
        let j = analytic_jet(&s.mats, &times, &s.theta.theta, x, y);
        for terms in bpz_terms(&j, x, y, &times, &s.theta) {
            assert!(entrywise_residual(&terms).1 < 1e-13);
        }
        for i in 0..2 {
            assert!(entrywise_residual(&kevol_terms(i, &j, x, y, &times, &s.theta)).1 < 1e-13);
        }
    }

    #[test]
    fn evolution_equations_swap() {
        let (s, times) = generic();
        let (x, y) = (c(1.4, 0.5), c(-0.75, -0.8));
        let j = analytic_jet(&s.mats, &times, &s.theta.theta, x, y);
        let mut js = j;
        js.dt.swap(0, 1);
        let mut ts = times;
        ts.swap(0, 1);
        let mut th = s.theta.theta;
        th.swap(0, 1);
        let ths = ThetaGO::with_delta_inf(th, s.theta.theta_inf, s.theta.delta_inf);
        let a = kevol_terms(0, &j, x, y, &times, &s.theta);
        let b = kevol_terms(1, &js, x, y, &ts, &ths);
        let sa: Mat2 = a.into_iter().sum();
        let sb: Mat2 = b.into_iter().sum();
        assert!((sa - sb).max_abs() < 1e-15 * (1.0 + sa.max_abs()));
    }

    #[test]
    fn quantized_equations_swap() {
        let th = ThetaGO::new(theta4(), c(0.6, -0.2));
        let ab = solve_alpha_beta(&th, AlphaBranch::AlphaNeg, BetaBranch::BetaSmall).unwrap();
        let m = |k: f64| Mat2::new(c(k, 1.0), c(0.3, k), c(-k, 0.2), c(1.0, -k));
        let v = VJet {
            val: m(0.1),
            dz: m(0.2),
            de: m(0.3),
            dzz: m(0.4),
            dze: m(0.5),
            dee: m(0.6),
            dt: [m(0.7), m(0.8)],
        };
        let sw = VJet {
            dz: v.de,
            de: v.dz,
            dzz: v.dee,
            dee: v.dzz,
            dt: [v.dt[1], v.dt[0]],
            ..v
        };
        let (t1, t2, z, e) = (c(0.35, 0.45), c(-0.4, 0.3), c(0.2, -0.7), c(1.1, 0.4));
        let mut ths = th.theta;
        ths.swap(0, 1);
        let ths = ThetaGO::with_delta_inf(ths, th.theta_inf, th.delta_inf);
        let a: Mat2 = quantized_pg_terms(0, &v, z, e, t1, t2, &th, &ab).into_iter().sum();
        let b: Mat2 = quantized_pg_terms(1, &sw, e, z, t2, t1, &ths, &ab).into_iter().sum();
        assert!((a - b).max_abs() < 1e-13 * (1.0 + a.max_abs()));
    }

    #[test]
    fn degenerate_frame_has_closed_form() {
        let s = SchlesingerState::new(
            c(0.35, 0.45),
            c(-0.4, 0.3),
            [Mat2::zero(); 4],
            Normalization::B,
            ThetaGO::new([re(0.0); 4], re(1.0)),
        )
        .unwrap();
        let xp = XPath::segment([c(0.3, -1.0)], [c(0.5, -1.0)], 0.1);
        let tp = crate::numerics::TPath::segment([s.t1, s.t2], [s.t1 + c(0.05, 0.0), s.t2], 0.1);
        let f = Frame::build(&s, &xp, &tp, &OdeOptions::default()).unwrap();
        let grid = [(c(1.2, -0.5), c(-0.6, -0.8)), (c(0.2, -1.4), c(0.9, -0.4))];
        let plan = FdPlan::default();
        for r in bpz_residual(&f, 1, &grid, &plan).unwrap() {
            assert!(r.max_rel_residual < 1e-8, "{} {}", r.equation_id, r.max_rel_residual);
        }
        for r in kevol_residual(&f, 1, &grid, &plan).unwrap() {
            assert!(r.max_rel_residual < 1e-8, "{} {}", r.equation_id, r.max_rel_residual);
        }
    }

    #[test]
    fn report_aggregates_and_csv() {
        let pts = vec![
            point(re(1.0), re(2.0), (1e-3, 1e-6, 1e3)),
            point(re(3.0), re(4.0), (1e-4, 1e-5, 10.0)),
        ];
        let r = ResidualReport::from_points("x", pts, &FdPlan::default()).unwrap();
        assert_eq!(r.max_abs_residual, 1e-3);
        assert_eq!(r.max_rel_residual, 1e-5);
        assert_eq!(r.normalization, 10.0);
        assert!(r.passes(1e-5) && !r.passes(1e-6));
        let mut buf = Vec::new();
        write_residual_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re_x,im_x,re_y,im_y,equation_id,abs_residual,rel_residual\n"));
        assert_eq!(text.lines().count(), 3);
        let bad = vec![point(re(1.0), re(2.0), (f64::NAN, f64::NAN, 0.0))];
        assert!(ResidualReport::from_points("x", bad, &FdPlan::default()).is_err());
    }
}

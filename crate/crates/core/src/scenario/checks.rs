//! One function per mode. Each measures the quantities of the criteria the
//! mode decides and records them, with their thresholds, in the report.

use super::config::{Mode, ScenarioConfig};
use super::report::{DriftRow, RunReport, Verdict};
use crate::error::{LabError, Result};
use crate::garnier_okamoto::{extract_along, extract_go, extract_go_following, go_vector_field};
use crate::numerics::{fd_derivative, re, Cx, Mat2, OdeOptions, TPath, XPath};
use crate::poly_garnier::{
    bridge_lambda_from_q, bridge_q_from_lambda, generate_pg_state, integrate_pg, integrate_pg_from,
    integrate_pg_in_omega, integrate_pvi, mu_p_relations, pg_field, pg_rhs_explicit, hamiltonian_hgar,
    pvi_reduce, pvi_rhs, to_schlesinger, PGPoint, PGState, PVIState,
};
use crate::quantization::{
    abel_check, bpz_residual, entrywise_residual, frame_go_state, garx_residual, kevol_bpz_consistency,
    kevol_residual, kevol_terms, pair_grid, quantized_pg_residual, quantized_pg_terms, rectangle_loop,
    s_closed_form, s_partial, scalar_residual, solve_alpha_beta, spectral_samples, v_jet, y_jet, zeta_eta_inverse,
    zeta_eta_map, AlphaBranch, BetaBranch, FdPlan, Frame, GridSpec, VJet,
};
use crate::schlesinger::{
    generate_b_state, integrate_schlesinger, schlesinger_rhs4, shift_normalization, tau_logderiv, GenOptions,
    Normalization, SchlesingerState, ShiftDirection, ThetaGO,
};

pub const CONSERVATION_TOL: f64 = 1e-9;
pub const LOOP_TOL: f64 = 1e-8;
pub const GO_FIELD_TOL: f64 = 1e-6;
pub const HAMILTON_TOL: f64 = 1e-8;
pub const ROUNDOFF_TOL: f64 = 1e-12;
pub const LINEARIZATION_TOL: f64 = 1e-6;
pub const SPECTRUM_TOL: f64 = 1e-10;
pub const BRIDGE_LAMBDA_TOL: f64 = 1e-8;
pub const BRIDGE_MU_TOL: f64 = 1e-7;
pub const BRIDGE_ROUNDTRIP_TOL: f64 = 1e-10;
pub const BPZ_TOL: f64 = 1e-5;
pub const DEGENERATE_TOL: f64 = 1e-8;
pub const KEVOL_TOL: f64 = 1e-5;
pub const QPG_TOL: f64 = 1e-4;
pub const INVERSE_TOL: f64 = 1e-10;
pub const DRIFT_TOL: f64 = 1e-9;
pub const PVI_FIELD_TOL: f64 = 1e-6;
pub const CLOSEDNESS_TOL: f64 = 1e-6;
pub const GAUGE_EXPONENT_TOL: f64 = 1e-9;
pub const SCALAR_ODE_TOL: f64 = 1e-6;
pub const ABEL_TOL: f64 = 1e-6;
/// Relative residual allowed a few stencil reaches away from an apparent
/// singular point.
pub const REGULARITY_TOL: f64 = 1e-4;

/// Exclusion radius of the short flows behind every time derivative.
const FLOW_RADIUS: f64 = 1e-3;

/// Checks that are not one of the numbered criteria.
pub const SUPPLEMENTARY: u8 = 0;

fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

fn rel(a: Cx, b: Cx) -> f64 {
    scalar_residual(&[a, -b]).1
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

struct Setup {
    opts: OdeOptions,
    plan: FdPlan,
    seed: u64,
    states: usize,
    points: usize,
}

impl Setup {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let s = cfg.samples();
        Ok(Setup {
            opts: cfg.tolerances.ode(),
            plan: cfg.tolerances.fd_plan()?,
            seed: cfg.seed,
            states: s.states,
            points: s.points,
        })
    }

    fn seed(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }
}

fn go_times(cfg: &ScenarioConfig) -> (Cx, Cx) {
    let d = GenOptions::default();
    (cfg.initial.t1.unwrap_or(d.t1), cfg.initial.t2.unwrap_or(d.t2))
}

fn pg_times(cfg: &ScenarioConfig) -> (Cx, Cx) {
    (cfg.initial.t1.unwrap_or(c(0.3, 0.2)), cfg.initial.t2.unwrap_or(c(-0.7, 0.5)))
}

/// The configured time path, or a straight segment by `delta` from `start`.
fn t_path(cfg: &ScenarioConfig, start: (Cx, Cx), delta: [Cx; 2]) -> TPath {
    let r = cfg.paths.exclusion_radius;
    match &cfg.paths.t {
        Some(w) => TPath::new(w.clone(), r),
        None => TPath::segment([start.0, start.1], [start.0 + delta[0], start.1 + delta[1]], r),
    }
}

/// B-normalized states: the explicit residues, or seeded draws.
fn b_states(cfg: &ScenarioConfig, n: usize, seed: impl Fn(usize) -> u64) -> Result<Vec<SchlesingerState>> {
    let (t1, t2) = go_times(cfg);
    let th = cfg.go_theta();
    if let Some(m) = cfg.initial.matrices {
        let theta = cfg
            .go_exponents()
            .ok_or_else(|| LabError::ConfigInvalid("theta.go.theta_inf: required with explicit residues".into()))?;
        let s = SchlesingerState::new(t1, t2, m, Normalization::B, theta)?;
        s.check_invariants(1e-12)?;
        return Ok(vec![s]);
    }
    let opts = GenOptions {
        t1,
        t2,
        theta_inf: th.theta_inf,
        scale: 1.0,
    };
    (0..n)
        .map(|k| Ok(generate_b_state(th.theta, &opts, seed(k))?.state))
        .collect()
}

fn flow_schlesinger(s: &SchlesingerState, to: [Cx; 2], opts: &OdeOptions) -> Result<SchlesingerState> {
    if to == [s.t1, s.t2] {
        return Ok(s.clone());
    }
    let path = TPath::segment([s.t1, s.t2], to, FLOW_RADIUS);
    Ok(integrate_schlesinger(s, &path, opts)?.end().state.clone())
}

fn flow_pg(p: &PGPoint, to: [Cx; 2], opts: &OdeOptions) -> Result<PGPoint> {
    let s = &p.state;
    if to == [s.t1, s.t2] {
        return Ok(p.clone());
    }
    let path = TPath::segment([s.t1, s.t2], to, FLOW_RADIUS);
    Ok(integrate_pg_from(s, p.ln_u, &path, opts)?.end().clone())
}

fn flow_pvi(st: &PVIState, to: Cx, opts: &OdeOptions) -> Result<PVIState> {
    if to == st.omega {
        return Ok(*st);
    }
    let path = XPath::segment([st.omega], [to], FLOW_RADIUS);
    Ok(*integrate_pvi(st, &path, opts)?.last().expect("non-empty trajectory"))
}

pub fn run_mode(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<()> {
    let setup = Setup::new(cfg)?;
    match cfg.mode {
        Mode::Schlesinger => schlesinger(cfg, &setup, report),
        Mode::GarnierGo => garnier_go(cfg, &setup, report),
        Mode::GarnierPoly => garnier_poly(cfg, &setup, report),
        Mode::Bridge => bridge(cfg, &setup, report),
        Mode::Bpz => bpz(cfg, &setup, report),
        Mode::QuantizeGo => quantize_go(cfg, &setup, report),
        Mode::QuantizePg => quantize_pg(cfg, &setup, report),
        Mode::Pvi => pvi(cfg, &setup, report),
    }
}

fn schlesinger(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let states = stage("generate", b_states(cfg, st.states, |k| st.seed(k)))?;
    let path = t_path(cfg, go_times(cfg), [c(0.5, 0.5), c(-0.5, 0.5)]);
    let opts = st.opts.with_samples(8);
    let (mut tr_d, mut det_d, mut inf_d) = (0.0f64, 0.0f64, 0.0f64);
    for (k, s) in states.iter().enumerate() {
        let tr = stage("integrate", integrate_schlesinger(s, &path, &opts))?;
        let d = tr.max_drift();
        tr_d = tr_d.max(d.trace);
        det_d = det_d.max(d.det);
        inf_d = inf_d.max(d.a_inf);
        report.drift.push(DriftRow {
            label: format!("state {k}"),
            drift: d,
        });
    }
    report.push(Verdict::at_most(1, "trace drift", tr_d, CONSERVATION_TOL));
    report.push(Verdict::at_most(1, "determinant drift", det_d, CONSERVATION_TOL));
    report.push(Verdict::at_most(1, "A_inf drift", inf_d, CONSERVATION_TOL));

    let (mut closed, mut gauge) = (0.0f64, 0.0f64);
    for s in states.iter().take(5) {
        let d2_of_1 = stage(
            "tau closedness",
            fd_derivative(
                |t2| Ok(tau_logderiv(&flow_schlesinger(s, [s.t1, t2], &st.opts)?)?.0),
                s.t2,
                &st.plan.first,
            ),
        )?;
        let d1_of_2 = stage(
            "tau closedness",
            fd_derivative(
                |t1| Ok(tau_logderiv(&flow_schlesinger(s, [t1, s.t2], &st.opts)?)?.1),
                s.t1,
                &st.plan.first,
            ),
        )?;
        closed = closed.max(rel(d2_of_1, d1_of_2));
        let times = s.times();
        for i in 0..4 {
            let fd = fd_derivative(
                |z| {
                    let mut t = times;
                    t[i] = z;
                    Ok(s_closed_form(t, &s.theta.theta))
                },
                times[i],
                &st.plan.first,
            )?;
            gauge = gauge.max(rel(fd, s_partial(times, &s.theta.theta, i)));
        }
    }
    report.push(Verdict::at_most(11, "ln tau mixed partials", closed, CLOSEDNESS_TOL));
    report.push(Verdict::at_most(11, "gauge exponent derivative", gauge, GAUGE_EXPONENT_TOL));
    Ok(())
}

fn garnier_go(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let states = stage("generate", b_states(cfg, st.states, |k| st.seed(k)))?;
    let path = t_path(cfg, go_times(cfg), [c(0.1, 0.05), c(-0.05, 0.1)]);
    let opts = st.opts.with_samples(st.points.max(1));
    let mut worst = 0.0f64;
    for s in &states {
        let q = shift_normalization(s, ShiftDirection::BtoQ)?;
        let tr = stage("integrate", integrate_schlesinger(&q, &path, &opts))?;
        let gs = stage("extract", extract_along(tr.points.iter().map(|p| &p.state)))?;
        for (p, g) in tr.points.iter().zip(&gs) {
            let field = stage("GO field", go_vector_field(g, &st.plan.first))?;
            let here = [p.state.t1, p.state.t2];
            for j in 0..2 {
                let d = stage(
                    "GO derivative",
                    fd_derivative(
                        |z| {
                            let mut t = here;
                            t[j] = z;
                            let h = extract_go_following(&flow_schlesinger(&p.state, t, &st.opts)?, g)?;
                            Ok(vec![h.lambda[0], h.lambda[1], h.mu[0], h.mu[1]])
                        },
                        here[j],
                        &st.plan.first,
                    ),
                )?;
                let expect = [field.dlambda[j][0], field.dlambda[j][1], field.dmu[j][0], field.dmu[j][1]];
                for (a, b) in d.iter().zip(expect) {
                    worst = worst.max(rel(*a, b));
                }
            }
        }
    }
    report.push(Verdict::at_most(3, "extracted flow vs Hamiltonian field", worst, GO_FIELD_TOL));
    Ok(())
}

fn pg_states(cfg: &ScenarioConfig, n: usize, st: &Setup) -> Result<Vec<PGState>> {
    let theta = cfg.pg_theta()?;
    let (t1, t2) = pg_times(cfg);
    if let (Some(q), Some(p)) = (cfg.initial.q, cfg.initial.p) {
        return Ok(vec![PGState::new(t1, t2, q, p, theta)?]);
    }
    (0..n).map(|k| generate_pg_state(theta, t1, t2, 0.8, st.seed(k))).collect()
}

fn spectrum_defect(m: &Mat2, th: Cx) -> f64 {
    let (a, b) = m.eigenvalues();
    (a.norm() + (b - th).norm()).min(b.norm() + (a - th).norm())
}

fn garnier_poly(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let states = stage("generate", pg_states(cfg, st.states, st))?;
    let (mut ham, mut coincide) = (0.0f64, 0.0f64);
    for s in &states {
        let f = pg_field(s)?;
        for (i, d) in [(1, f.d_t1), (2, f.d_t2)] {
            for k in 0..4 {
                // ∂q/∂t = ∂H/∂p, ∂p/∂t = −∂H/∂q.
                let (var, sign) = if k < 2 { (k + 2, 1.0) } else { (k - 2, -1.0) };
                let partial = fd_derivative(
                    |z| {
                        let mut v = s.vector();
                        v[var] = z;
                        hamiltonian_hgar(i, &s.with_vector(s.t1, s.t2, &v))
                    },
                    s.vector()[var],
                    &st.plan.first,
                )? * sign;
                ham = ham.max(rel(partial, d[k]));
            }
        }
        let r = pg_rhs_explicit(s)?;
        coincide = coincide.max(rel(r.opo, r.tqo));
    }
    report.push(Verdict::at_most(4, "explicit field vs Hamiltonian partials", ham, HAMILTON_TOL));
    report.push(Verdict::at_most(4, "opo = tqo", coincide, ROUNDOFF_TOL));

    let (t1, t2) = pg_times(cfg);
    let path = t_path(cfg, (t1, t2), [c(0.1, 0.05), c(-0.05, 0.08)]);
    let opts = st.opts.with_samples(st.points.max(1));
    let (mut lin, mut spec) = (0.0f64, 0.0f64);
    for s in states.iter().take(5) {
        let tr = stage("integrate", integrate_pg(s, &path, &opts))?;
        for p in &tr.points {
            let q = stage("linearize", to_schlesinger(&p.state, p.u))?;
            for (m, th) in q.mats.iter().zip(q.theta.theta) {
                spec = spec.max(spectrum_defect(m, th));
            }
            let rhs = schlesinger_rhs4(&q.mats, &q.times())?;
            let here = [p.state.t1, p.state.t2];
            for i in 0..2 {
                let d = stage(
                    "linearization derivative",
                    fd_derivative(
                        |z| {
                            let mut t = here;
                            t[i] = z;
                            let e = flow_pg(p, t, &st.opts)?;
                            let m = to_schlesinger(&e.state, e.u)?.mats;
                            Ok(m.iter().flat_map(|a| a.entries()).collect::<Vec<Cx>>())
                        },
                        here[i],
                        &st.plan.first,
                    ),
                )?;
                for j in 0..4 {
                    let fd = Mat2::read_from(&d[4 * j..]);
                    lin = lin.max(entrywise_residual(&[fd, -rhs[i][j]]).1);
                }
            }
        }
    }
    report.push(Verdict::at_most(5, "linearized matrices obey the Schlesinger flow", lin, LINEARIZATION_TOL));
    report.push(Verdict::at_most(5, "spectra {0, theta}", spec, SPECTRUM_TOL));
    Ok(())
}

fn bridge(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let states = stage("generate", pg_states(cfg, st.states, st))?;
    let (mut lam, mut mu, mut round) = (0.0f64, 0.0f64, 0.0f64);
    for s in &states {
        let g = stage("extract", to_schlesinger(s, re(1.0)).and_then(|q| extract_go(&q)))?;
        let (l1, l2) = bridge_lambda_from_q(s.q[0], s.q[1], s.t1, s.t2)?;
        lam = lam.max((l1 - g.lambda[0]).norm()).max((l2 - g.lambda[1]).norm());
        let (r1, r2) = mu_p_relations(s, &g)?;
        mu = mu.max(r1.norm()).max(r2.norm());
        let (q1, q2) = bridge_q_from_lambda(l1, l2, s.t1, s.t2)?;
        round = round.max((q1 - s.q[0]).norm()).max((q2 - s.q[1]).norm());
    }
    report.push(Verdict::at_most(6, "lambda from q vs extraction", lam, BRIDGE_LAMBDA_TOL));
    report.push(Verdict::at_most(6, "mu-p relations", mu, BRIDGE_MU_TOL));
    report.push(Verdict::at_most(6, "q -> lambda -> q roundtrip", round, BRIDGE_ROUNDTRIP_TOL));
    Ok(())
}

fn build_frame(cfg: &ScenarioConfig, s: &SchlesingerState, opts: &OdeOptions) -> Result<Frame> {
    let r = cfg.paths.exclusion_radius;
    let xs = cfg.paths.x.clone().unwrap_or_else(|| vec![c(0.3, -1.0), c(0.5, -1.0)]);
    let xp = XPath::new(xs.into_iter().map(|x| [x]).collect(), r);
    let tp = t_path(cfg, (s.t1, s.t2), [c(0.05, 0.0), c(0.0, 0.05)]);
    stage("transport", Frame::build(s, &xp, &tp, &opts.with_samples(2)))
}

fn frames(cfg: &ScenarioConfig, st: &Setup) -> Result<Vec<Frame>> {
    let states = stage("generate", b_states(cfg, st.states, |k| st.seed(k)))?;
    states.iter().map(|s| build_frame(cfg, s, &st.opts)).collect()
}

fn grid_for(frame: &Frame, k: usize, n: usize, seed: u64) -> Result<Vec<(Cx, Cx)>> {
    let spec = GridSpec { seed, ..GridSpec::default() };
    pair_grid(&spec, n, frame.slices[k].carrier.times)
}

/// Keeps the largest relative residual per equation across frames.
fn fold_worst(worst: &mut Vec<(String, f64)>, id: &str, v: f64) {
    match worst.iter_mut().find(|(k, _)| k == id) {
        Some(w) => w.1 = w.1.max(v),
        None => worst.push((id.to_string(), v)),
    }
}

fn bpz(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let frames = frames(cfg, st)?;
    let mut worst = Vec::new();
    let mut loops = 0.0f64;
    for (n, f) in frames.iter().enumerate() {
        let k = f.last_slice();
        let grid = stage("grid", grid_for(f, k, st.points, st.seed(n)))?;
        for r in stage("BPZ residuals", bpz_residual(f, k, &grid, &st.plan))? {
            fold_worst(&mut worst, &r.equation_id, r.max_rel_residual);
            report.checks.push(r);
        }
        let carrier = &f.slices[k].carrier;
        for i in 0..2 {
            let m = stage("rectangle loop", rectangle_loop(carrier, 0, c(0.3, 0.0), i, c(0.05, 0.05), &st.opts))?;
            loops = loops.max((m - Mat2::identity()).max_abs());
        }
    }
    report.push(Verdict::at_most(2, "rectangle loops in (x, t1) and (x, t2)", loops, LOOP_TOL));
    for (id, v) in worst {
        report.push(Verdict::at_most(7, id, v, BPZ_TOL));
    }

    // Zero residues with zero exponents: Y = τ/(x − y)·I.
    let (t1, t2) = go_times(cfg);
    let zero = SchlesingerState::new(t1, t2, [Mat2::zero(); 4], Normalization::B, ThetaGO::new([re(0.0); 4], re(1.0)))?;
    let f = build_frame(cfg, &zero, &st.opts)?;
    let grid = stage("grid", grid_for(&f, 0, 10, st.seed))?;
    let mut deg = 0.0f64;
    for r in stage("degenerate BPZ residuals", bpz_residual(&f, 0, &grid, &st.plan))? {
        deg = deg.max(r.max_rel_residual);
    }
    report.push(Verdict::at_most(7, "degenerate closed form", deg, DEGENERATE_TOL));
    Ok(())
}

/// `|Σa − Σb|` relative to the largest single term: the two sums are
/// residuals near zero, so only the term scale is meaningful.
fn exchange_defect(a: Vec<Mat2>, b: Vec<Mat2>) -> f64 {
    let scale = a.iter().chain(&b).map(Mat2::max_abs).fold(0.0, f64::max);
    let sa: Mat2 = a.into_iter().sum();
    let sb: Mat2 = b.into_iter().sum();
    (sa - sb).max_abs() / (scale + 1e-300)
}

fn swapped_theta(th: &ThetaGO) -> ThetaGO {
    let mut t = th.theta;
    t.swap(0, 1);
    ThetaGO::with_delta_inf(t, th.theta_inf, th.delta_inf)
}

fn quantize_go(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let frames = frames(cfg, st)?;
    let mut worst = Vec::new();
    let (mut swap, mut consist) = (0.0f64, 0.0f64);
    let (mut scalar, mut abel, mut regular) = (0.0f64, 0.0f64, 0.0f64);
    for (n, f) in frames.iter().enumerate() {
        let k = f.last_slice();
        let grid = stage("grid", grid_for(f, k, st.points, st.seed(n)))?;
        for r in stage("evolution residuals", kevol_residual(f, k, &grid, &st.plan))? {
            fold_worst(&mut worst, &r.equation_id, r.max_rel_residual);
            report.checks.push(r);
        }
        let r = stage("consistency", kevol_bpz_consistency(f, k, &grid, &st.plan))?;
        consist = consist.max(r.max_rel_residual);
        report.checks.push(r);

        // (t1, θ1) ↔ (t2, θ2) exchanges the two equations.
        let (x, y) = grid[0];
        let patch = f.patch(k, x, y)?;
        let j = stage("jet", y_jet(&patch, &f.theta, &st.plan, &f.opts, 2))?;
        let mut js = j;
        js.dt.swap(0, 1);
        let mut ts = patch.times;
        ts.swap(0, 1);
        swap = swap.max(exchange_defect(
            kevol_terms(0, &j, x, y, &patch.times, &f.theta),
            kevol_terms(1, &js, x, y, &ts, &swapped_theta(&f.theta)),
        ));

        let g = stage("GO state", frame_go_state(f, k))?;
        let xs = stage(
            "spectral samples",
            spectral_samples(&GridSpec { seed: st.seed(n), ..GridSpec::default() }, 20, g.times(), &g.lambda),
        )?;
        let r = stage("scalar equation", garx_residual(f, k, &g, &xs, &st.plan))?;
        scalar = scalar.max(r.max_rel_residual);
        report.checks.push(r);
        let r = stage("Abel identity", abel_check(f, k, &g, &xs, &st.plan))?;
        abel = abel.max(r.max_rel_residual);
        report.checks.push(r);
        // A few stencil reaches from each λ_k the equation still holds.
        let reach = 4.0 * st.plan.second.reach_at(g.lambda[0]).max(st.plan.second.reach_at(g.lambda[1]));
        let near: Vec<Cx> = g
            .lambda
            .iter()
            .flat_map(|l| [c(1.0, 0.0), c(0.0, -1.0)].map(|d| l + d * reach))
            .collect();
        let mut r = stage("regularity probe", garx_residual(f, k, &g, &near, &st.plan))?;
        r.equation_id = "scalar_ode_near_lambda".into();
        regular = regular.max(r.max_rel_residual);
        report.checks.push(r);
    }
    for (id, v) in worst {
        report.push(Verdict::at_most(8, id, v, KEVOL_TOL));
    }
    report.push(Verdict::at_most(8, "index exchange", swap, ROUNDOFF_TOL));
    report.push(Verdict::at_most(8, "consistency with the BPZ x-equation", consist, KEVOL_TOL));
    report.push(Verdict::at_most(SUPPLEMENTARY, "scalar equation", scalar, SCALAR_ODE_TOL));
    report.push(Verdict::at_most(SUPPLEMENTARY, "Abel identity", abel, ABEL_TOL));
    report.push(Verdict::at_most(SUPPLEMENTARY, "regularity near lambda", regular, REGULARITY_TOL));
    Ok(())
}

fn quantize_pg(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let frames = frames(cfg, st)?;
    let mut worst = Vec::new();
    let (mut inverse, mut swap, mut defect) = (0.0f64, 0.0f64, 0.0f64);
    for (n, f) in frames.iter().enumerate() {
        let k = f.last_slice();
        let grid = stage("grid", grid_for(f, k, st.points, st.seed(n)))?;
        let (t1, t2) = f.slices[k].t;
        for &(x, y) in &grid {
            let (z, e) = zeta_eta_map(x, y, t1, t2)?;
            // Invert from a hint displaced from the answer, then map forward.
            let (a, b) = zeta_eta_inverse(z, e, t1, t2, (x + c(0.01, 0.0), y - c(0.01, 0.0)))?;
            let (z2, e2) = zeta_eta_map(a, b, t1, t2)?;
            inverse = inverse.max(rel(z2, z)).max(rel(e2, e));
        }
        let branches: &[(AlphaBranch, BetaBranch)] = if n == 0 {
            &[(AlphaBranch::Alpha0, BetaBranch::BetaSmall), (AlphaBranch::AlphaNeg, BetaBranch::BetaLarge)]
        } else {
            &[(AlphaBranch::Alpha0, BetaBranch::BetaSmall)]
        };
        for &(a, b) in branches {
            let ab = solve_alpha_beta(&f.theta, a, b)?;
            let (d1, d2) = ab.defects(&f.theta);
            defect = defect.max(d1).max(d2 / (1.0 + f.theta.bpz_lambda.norm()));
            for r in stage("quantized polynomial residuals", quantized_pg_residual(f, k, &grid, &ab, &st.plan))? {
                fold_worst(&mut worst, &r.equation_id, r.max_rel_residual);
                report.checks.push(r);
            }
            let (x, y) = grid[0];
            let (z, e, v) = stage("jet", v_jet(&f.patch(k, x, y)?, &f.theta, &ab, &st.plan, &f.opts))?;
            let sw = VJet {
                dz: v.de,
                de: v.dz,
                dzz: v.dee,
                dee: v.dzz,
                dt: [v.dt[1], v.dt[0]],
                ..v
            };
            swap = swap.max(exchange_defect(
                quantized_pg_terms(0, &v, z, e, t1, t2, &f.theta, &ab),
                quantized_pg_terms(1, &sw, e, z, t2, t1, &swapped_theta(&f.theta), &ab),
            ));
        }
    }
    for (id, v) in worst {
        report.push(Verdict::at_most(9, id, v, QPG_TOL));
    }
    report.push(Verdict::at_most(9, "forward map of the inverse", inverse, INVERSE_TOL));
    report.push(Verdict::at_most(9, "index exchange", swap, ROUNDOFF_TOL));
    report.push(Verdict::at_most(9, "exponent constraints", defect, ROUNDOFF_TOL));
    Ok(())
}

fn pvi_states(cfg: &ScenarioConfig, st: &Setup) -> Result<Vec<PGState>> {
    let theta = cfg.pg_theta()?;
    let (t1, t2) = pg_times(cfg);
    if let Some(q) = cfg.initial.q {
        let p = cfg.initial.p.unwrap_or([re(0.0); 2]);
        return Ok(vec![PGState::new(t1, t2, q, p, theta)?]);
    }
    (0..st.states)
        .map(|k| {
            let g = generate_pg_state(theta, t1, t2, 0.8, st.seed(k))?;
            PGState::new(t1, t2, [g.q[0], re(1.0) - g.q[0]], g.p, theta)
        })
        .collect()
}

fn pvi(cfg: &ScenarioConfig, st: &Setup, report: &mut RunReport) -> Result<()> {
    let states = stage("generate", pvi_states(cfg, st))?;
    // Preconditions first: nothing is integrated unless every state reduces.
    let reduced = stage("reduce", states.iter().map(pvi_reduce).collect::<Result<Vec<_>>>())?;
    let opts = st.opts.with_samples(st.points.max(1));
    let (mut drift, mut agree, mut field) = (0.0f64, 0.0f64, 0.0f64);
    for (s, r0) in states.iter().zip(&reduced) {
        let path = match &cfg.paths.omega {
            Some(w) => XPath::new(w.iter().map(|z| [*z]).collect(), cfg.paths.exclusion_radius),
            None => XPath::segment([r0.omega], [r0.omega + c(0.3, 0.4)], cfg.paths.exclusion_radius),
        };
        let full = stage("integrate", integrate_pg_in_omega(s, &path, &opts))?;
        let red = stage("integrate reduced", integrate_pvi(r0, &path, &opts))?;
        for ((_, ps), r) in full.iter().zip(&red) {
            drift = drift.max((ps.q[0] + ps.q[1] - 1.0).norm());
            agree = agree.max((ps.q[0] - r.q).norm()).max((ps.p[0] - ps.p[1] - r.p).norm());
        }
        for r in &red {
            let d = stage(
                "PVI derivative",
                fd_derivative(
                    |w| {
                        let e = flow_pvi(r, w, &st.opts)?;
                        Ok(vec![e.q, e.p])
                    },
                    r.omega,
                    &st.plan.first,
                ),
            )?;
            let (dq, dp) = pvi_rhs(r)?;
            field = field.max(rel(d[0], dq)).max(rel(d[1], dp));
        }
    }
    report.push(Verdict::at_most(10, "constraint drift", drift, DRIFT_TOL));
    report.push(Verdict::at_most(10, "reduced vs full flow", agree, DRIFT_TOL));
    report.push(Verdict::at_most(10, "Hamiltonian system", field, PVI_FIELD_TOL));
    Ok(())
}

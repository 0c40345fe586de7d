//! Integrate a random B-normalized state along a short path in (t1, t2) and
//! report how well the spectral invariants are conserved.
//!
//! cargo run --release --example schlesinger_flow [seed]

use garnier_lab::numerics::{Cx, OdeOptions, TPath};
use garnier_lab::schlesinger::{generate_b_state, integrate_schlesinger, GenOptions};

fn main() -> garnier_lab::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let theta = [Cx::new(0.3, 0.14), Cx::new(-0.4, 0.33), Cx::new(0.17, -0.2), Cx::new(0.29, 0.11)];
    let g = generate_b_state(theta, &GenOptions::default(), seed)?;
    let s = &g.state;
    let end = [s.t1 + Cx::new(0.3, 0.2), s.t2 + Cx::new(-0.2, 0.25)];
    let path = TPath::segment([s.t1, s.t2], end, 0.05);
    let tr = integrate_schlesinger(s, &path, &OdeOptions::default().with_samples(4))?;
    for p in &tr.points {
        println!("t1 = {:.4}  t2 = {:.4}  ln tau = {:.10}", p.state.t1, p.state.t2, p.ln_tau);
    }
    let d = tr.max_drift();
    println!("drift: trace {:.2e}  det {:.2e}  A_inf {:.2e}", d.trace, d.det, d.a_inf);
    println!("steps: {} accepted, {} rejected", tr.stats.accepted, tr.stats.rejected);
    Ok(())
}

//! On the invariant plane q1 + q2 = 1 the two-time system reduces to a single
//! Hamiltonian system in ω. Integrate both and compare.
//!
//! cargo run --release --example painleve_vi_reduction

use garnier_lab::numerics::{Cx, OdeOptions, XPath};
use garnier_lab::poly_garnier::{integrate_pg_in_omega, integrate_pvi, pvi_hamiltonian, pvi_reduce, PGState, ThetaPG};

fn main() -> garnier_lab::Result<()> {
    let theta = ThetaPG::on_reduction(Cx::new(0.3, 0.0), Cx::new(-0.2, 0.33), Cx::new(0.29, 0.0), Cx::new(0.25, -0.17));
    let q1 = Cx::new(0.2, -0.3);
    let s = PGState::new(
        Cx::new(0.3, 0.2),
        Cx::new(-0.7, 0.5),
        [q1, Cx::new(1.0, 0.0) - q1],
        [Cx::new(0.4, 0.1), Cx::new(-0.3, 0.2)],
        theta,
    )?;
    let r0 = pvi_reduce(&s)?;
    let path = XPath::segment([r0.omega], [r0.omega + Cx::new(0.3, 0.4)], 0.05);
    let opts = OdeOptions::default().with_samples(5);
    let full = integrate_pg_in_omega(&s, &path, &opts)?;
    let red = integrate_pvi(&r0, &path, &opts)?;
    for ((w, ps), r) in full.iter().zip(&red) {
        println!(
            "omega = {:.3}  Q = {:.8}  q1 = {:.8}  |q1+q2-1| = {:.1e}  H = {:.6}",
            w,
            r.q,
            ps.q[0],
            (ps.q[0] + ps.q[1] - 1.0).norm(),
            pvi_hamiltonian(r)
        );
    }
    Ok(())
}

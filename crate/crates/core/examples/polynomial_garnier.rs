//! Flow a polynomial Garnier state in both times, then map the endpoint to a
//! Schlesinger state and to Garnier–Okamoto coordinates.
//!
//! cargo run --release --example polynomial_garnier

use garnier_lab::garnier_okamoto::extract_go;
use garnier_lab::numerics::{Cx, OdeOptions, TPath};
use garnier_lab::poly_garnier::{
    bridge_lambda_from_q, generate_pg_state, hamiltonian_hgar, integrate_pg, to_schlesinger, ThetaPG,
};

fn main() -> garnier_lab::Result<()> {
    let theta = ThetaPG::from_free(
        Cx::new(0.3, 0.0),
        Cx::new(-0.2, 0.33),
        Cx::new(0.29, 0.0),
        Cx::new(-0.11, 0.2),
        Cx::new(0.25, -0.17),
    );
    let s0 = generate_pg_state(theta, Cx::new(0.3, 0.2), Cx::new(-0.7, 0.5), 0.8, 5)?;
    let path = TPath::segment([s0.t1, s0.t2], [s0.t1 + Cx::new(0.1, 0.05), s0.t2 + Cx::new(-0.05, 0.08)], 0.05);
    let tr = integrate_pg(&s0, &path, &OdeOptions::default().with_samples(3))?;
    for p in &tr.points {
        let s = &p.state;
        println!(
            "t = ({:.3}, {:.3})  q = [{:.6}, {:.6}]  H1 = {:.6}  u = {:.6}",
            s.t1,
            s.t2,
            s.q[0],
            s.q[1],
            hamiltonian_hgar(1, s)?,
            p.u
        );
    }
    let end = tr.end();
    let sch = to_schlesinger(&end.state, end.u)?;
    println!("Schlesinger constraint defect: {:.2e}", sch.constraint_defect());
    let go = extract_go(&sch)?;
    let (l1, l2) = bridge_lambda_from_q(end.state.q[0], end.state.q[1], end.state.t1, end.state.t2)?;
    println!("lambda from residues: [{:.8}, {:.8}]", go.lambda[0], go.lambda[1]);
    println!("lambda from bridge:   [{:.8}, {:.8}]", l1, l2);
    Ok(())
}

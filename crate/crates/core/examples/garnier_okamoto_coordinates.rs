//! Read off Garnier–Okamoto coordinates (λ, μ) from a Schlesinger state,
//! evaluate both Hamiltonians and their vector field.
//!
//! cargo run --release --example garnier_okamoto_coordinates

use garnier_lab::garnier_okamoto::{extract_go, go_vector_field, hamiltonian_k};
use garnier_lab::numerics::{Cx, FdScheme};
use garnier_lab::schlesinger::{generate_b_state, shift_normalization, GenOptions, ShiftDirection};

fn main() -> garnier_lab::Result<()> {
    let theta = [Cx::new(0.3, 0.14), Cx::new(-0.4, 0.33), Cx::new(0.17, -0.2), Cx::new(0.29, 0.11)];
    let g = generate_b_state(theta, &GenOptions::default(), 3)?;
    let q = shift_normalization(&g.state, ShiftDirection::BtoQ)?;
    let go = extract_go(&q)?;
    go.check_invariants()?;
    println!("lambda = [{:.6}, {:.6}]", go.lambda[0], go.lambda[1]);
    println!("mu     = [{:.6}, {:.6}]", go.mu[0], go.mu[1]);
    for i in 1..=2 {
        println!("K_{i} = {:.10}", hamiltonian_k(i, &go)?);
    }
    let f = go_vector_field(&go, &FdScheme::default())?;
    for j in 0..2 {
        let [l1, l2] = f.dlambda[j];
        let [m1, m2] = f.dmu[j];
        println!("d/dt{}: lambda' = [{l1:.6}, {l2:.6}]  mu' = [{m1:.6}, {m2:.6}]", j + 1);
    }
    Ok(())
}

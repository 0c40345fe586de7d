//! The polynomial Garnier system in two times, its linearization into the
//! Schlesinger picture, the bridge to Garnier–Okamoto coordinates, and the
//! reduction to a single Hamiltonian system in `ω`.

mod bridge;
mod hamiltonian;
mod linearization;
mod pvi;

pub use bridge::{bridge_lambda_from_q, bridge_q_from_lambda, lambda_symmetric, mu_p_relations, REDUCTION_TOL};
pub use hamiltonian::{
    find_fixed_point, generate_pg_state, hamiltonian_hgar, integrate_pg, integrate_pg_from, pg_field,
    pg_rhs_explicit, u_logderiv, ExplicitRhs, PGField, PGPoint, PGState, PGTrajectory, ThetaPG, FUCHS_TOL,
};
pub use linearization::{
    ahat_matrices, elem_a, gauge_matrix, gaup_numerator, theta_go, to_schlesinger, AHat, RESONANCE_TOL,
};
pub use pvi::{
    check_reduction, dt1_domega, integrate_pg_in_omega, integrate_pvi, omega_loci, omega_of, pvi_hamiltonian,
    pvi_partials, pvi_reduce, pvi_rhs, t1_of_omega, PVIState, REDUCTION_STATE_TOL,
};

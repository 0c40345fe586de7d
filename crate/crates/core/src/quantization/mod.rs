//! The fundamental solution, τ, the two-point matrix `M(x, y)`, its gauged
//! forms `Y` and `V`, and finite-difference residuals of the linear PDEs
//! they satisfy.

mod gauge;
mod grid;
mod residuals;
mod transport;

pub use gauge::{
    gauge_to_y, s_closed_form, s_partial, solve_alpha_beta, v_from_y, y_gauge_log, zeta_eta_inverse, zeta_eta_map,
    AlphaBeta, AlphaBranch, BetaBranch, GaugeLogs, DIAGONAL_EXCLUSION,
};
pub use grid::{pair_grid, spectral_samples, GridSpec};
pub use residuals::{
    abel_check, bpz_residual, bpz_terms, entrywise_residual, frame_go_state, garx_residual, kevol_bpz_consistency,
    kevol_residual, kevol_terms, quantized_pg_residual, quantized_pg_terms, scalar_residual, v_jet,
    write_residual_csv, y_jet, FdPlan, ResidualPoint, ResidualReport, VJet, YJet, BPZ_IDS, KEVOL_IDS, QPG_IDS,
};
pub use transport::{
    gauge_exponent, rectangle_loop, transport_phi, Carrier, Frame, PhiSample, Probe, TimeSlice, PAIRS,
    TRANSPORT_CLEARANCE,
};

//! Transport the fundamental solution to a grid of (x, y) pairs and measure
//! how well the two-point function satisfies the BPZ-type equations.
//!
//! cargo run --release --example bpz_residuals

use garnier_lab::numerics::{Cx, OdeOptions, TPath, XPath};
use garnier_lab::quantization::{bpz_residual, pair_grid, FdPlan, Frame, GridSpec};
use garnier_lab::schlesinger::{generate_b_state, GenOptions};

fn main() -> garnier_lab::Result<()> {
    let theta = [Cx::new(0.3, 0.14), Cx::new(-0.4, 0.33), Cx::new(0.17, -0.2), Cx::new(0.29, 0.11)];
    let s = generate_b_state(theta, &GenOptions::default(), 11)?.state;
    let x_path = XPath::new(vec![[Cx::new(0.3, -1.0)], [Cx::new(0.5, -1.0)]], 0.05);
    let t_path = TPath::segment([s.t1, s.t2], [s.t1 + 0.05, s.t2 + Cx::new(0.0, 0.05)], 0.05);
    let frame = Frame::build(&s, &x_path, &t_path, &OdeOptions::default().with_samples(2))?;
    let k = frame.last_slice();
    let grid = pair_grid(&GridSpec::default(), 20, frame.slices[k].carrier.times)?;
    for r in bpz_residual(&frame, k, &grid, &FdPlan::default())? {
        println!("{:<16} max rel {:.2e}  max abs {:.2e}", r.equation_id, r.max_rel_residual, r.max_abs_residual);
    }
    Ok(())
}

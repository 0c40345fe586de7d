//! Complex arithmetic, 2×2 matrices, path-following integration and finite
//! differences shared by every other module.

mod fd;
mod matrix;
mod ode;
mod path;
mod roots;

pub use fd::{fd_derivative, fd_second_derivative, FdScheme, FdValue};
pub use matrix::Mat2;
pub use ode::{integrate_unit, ode_integrate, OdeOptions, OdeStats, Trajectory, TrajectoryPoint};
pub use path::{Locus, PathPlan, TPath, XPath};
pub use roots::{quad_roots, solve_linear};

pub type Cx = num_complex::Complex64;

/// Shorthand for a real number as a complex scalar.
pub fn re(x: f64) -> Cx {
    Cx::new(x, 0.0)
}

/// Continues a logarithm along the straight segment from `f0` to `f1`:
/// given a branch value `ln_f0` of `log f0`, returns the value of `log f1` on
/// the same branch. Exact when the segment joining `f0` and `f1` avoids the
/// origin, i.e. when `f1/f0` is not on the negative real axis.
pub fn continued_log(f0: Cx, ln_f0: Cx, f1: Cx) -> Cx {
    ln_f0 + (f1 / f0).ln()
}

/// Relative distance `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_diff(a: Cx, b: Cx, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn continued_log_tracks_winding() {
        // Walk e^{iφ} around the circle in small steps; the log keeps growing.
        let mut ln = Cx::default();
        let mut f = re(1.0);
        for k in 1..=40 {
            let next = Cx::from_polar(1.0, 2.0 * PI * k as f64 / 40.0);
            ln = continued_log(f, ln, next);
            f = next;
        }
        assert!((ln - Cx::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }
}

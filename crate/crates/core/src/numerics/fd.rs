//! Central finite differences in one complex argument.
//!
//! The step actually used at `z` is `h = step · (1 + |z|)`, taken along the real
//! direction (the differentiated functions are holomorphic). With
//! `richardson = true` the estimates at `h` and `h/2` are combined, raising the
//! truncation order from `order` to `order + 2`.
//!
//! Error model: truncation `O(h^order)` (or `O(h^(order+2))` with
//! extrapolation) plus roundoff of roughly `ε·|f|/h` for first derivatives and
//! `ε·|f|/h²` for second derivatives, where `ε` is the noise level of `f`.

use serde::{Deserialize, Serialize};

use super::{Cx, Mat2};
use crate::error::{LabError, Result};

/// Values that finite differences can be taken of.
pub trait FdValue: Sized {
    /// `Σ w_k · v_k`.
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self;
}

impl FdValue for Cx {
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, v)| **v * *w).sum()
    }
}

impl FdValue for Mat2 {
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(w, v)| **v * *w).sum()
    }
}

impl FdValue for Vec<Cx> {
    fn weighted_sum(terms: &[(f64, &Self)]) -> Self {
        let n = terms.first().map_or(0, |(_, v)| v.len());
        let mut out = vec![Cx::default(); n];
        for (w, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += x * *w;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub order: u8,
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme {
            order: 4,
            step: 1e-4,
            richardson: true,
        }
    }
}

impl FdScheme {
    pub fn new(order: u8, step: f64, richardson: bool) -> Result<Self> {
        let s = FdScheme {
            order,
            step,
            richardson,
        };
        s.validate()?;
        Ok(s)
    }

    /// Scheme tuned for second derivatives of double-precision data: roundoff
    /// grows like `1/h²`, so the step is wider than the first-derivative default.
    pub fn second_derivative_default() -> Self {
        FdScheme {
            order: 4,
            step: 2e-3,
            richardson: true,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 2 && self.order != 4 {
            return Err(LabError::ConfigInvalid(format!(
                "finite-difference order must be 2 or 4, got {}",
                self.order
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(LabError::ConfigInvalid(format!(
                "finite-difference step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }

    /// The step used at `z`.
    pub fn step_at(&self, z: Cx) -> f64 {
        self.step * (1.0 + z.norm())
    }

    /// Widest stencil offset from `z`.
    pub fn reach_at(&self, z: Cx) -> f64 {
        let k = if self.order == 4 { 2.0 } else { 1.0 };
        k * self.step_at(z)
    }

    /// Checks that the stencil at `z` keeps clear of singular points at the given radius.
    pub fn check_radius(&self, z: Cx, exclusion_radius: f64) -> Result<()> {
        if self.step_at(z) >= exclusion_radius / 4.0 {
            return Err(LabError::ConfigInvalid(format!(
                "finite-difference step {:e} at {z} is not below a quarter of the exclusion radius {:e}",
                self.step_at(z),
                exclusion_radius
            )));
        }
        Ok(())
    }

    /// Offsets (in units of `h`), integer weights and common denominator of
    /// the first-derivative stencil.
    fn first_weights(&self) -> (&'static [(f64, f64)], f64) {
        match self.order {
            2 => (&[(-1.0, -1.0), (1.0, 1.0)], 2.0),
            _ => (&[(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)], 12.0),
        }
    }

    fn second_weights(&self) -> (&'static [(f64, f64)], f64) {
        match self.order {
            2 => (&[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)], 1.0),
            _ => (
                &[(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)],
                12.0,
            ),
        }
    }
}

fn stencil<T: FdValue>(
    f: &mut impl FnMut(Cx) -> Result<T>,
    z: Cx,
    h: f64,
    (weights, denom): (&[(f64, f64)], f64),
    power: i32,
) -> Result<T> {
    let mut values = Vec::with_capacity(weights.len());
    for &(k, _) in weights {
        let at = z + Cx::new(k * h, 0.0);
        let v = f(at).map_err(|e| LabError::StencilFailure {
            at,
            source: Box::new(e),
        })?;
        values.push(v);
    }
    // Integer weights first so that constants cancel exactly.
    let terms: Vec<(f64, &T)> = weights
        .iter()
        .zip(values.iter())
        .map(|(&(_, w), v)| (w, v))
        .collect();
    let sum = T::weighted_sum(&terms);
    Ok(T::weighted_sum(&[(1.0 / (denom * h.powi(power)), &sum)]))
}

fn differentiate<T: FdValue>(
    mut f: impl FnMut(Cx) -> Result<T>,
    z: Cx,
    scheme: &FdScheme,
    weights: (&[(f64, f64)], f64),
    power: i32,
) -> Result<T> {
    scheme.validate()?;
    let h = scheme.step_at(z);
    let coarse = stencil(&mut f, z, h, weights, power)?;
    if !scheme.richardson {
        return Ok(coarse);
    }
    let fine = stencil(&mut f, z, h / 2.0, weights, power)?;
    let r = 2f64.powi(scheme.order as i32);
    Ok(T::weighted_sum(&[
        (r / (r - 1.0), &fine),
        (-1.0 / (r - 1.0), &coarse),
    ]))
}

/// First derivative of `f` at `z`.
pub fn fd_derivative<T: FdValue>(
    f: impl FnMut(Cx) -> Result<T>,
    z: Cx,
    scheme: &FdScheme,
) -> Result<T> {
    differentiate(f, z, scheme, scheme.first_weights(), 1)
}

/// Second derivative of `f` at `z`.
pub fn fd_second_derivative<T: FdValue>(
    f: impl FnMut(Cx) -> Result<T>,
    z: Cx,
    scheme: &FdScheme,
) -> Result<T> {
    differentiate(f, z, scheme, scheme.second_weights(), 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn square_at_one() {
        let d = fd_derivative(|z| Ok(z * z), c(1.0, 0.0), &FdScheme::default()).unwrap();
        assert!((d - c(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let d = fd_derivative(|_| Ok(c(3.0, -2.0)), c(0.4, 0.4), &FdScheme::default()).unwrap();
        assert_eq!(d, Cx::default());
    }

    #[test]
    fn exponential_within_truncation_bound() {
        // A step large enough that roundoff sits far below step⁴.
        let scheme = FdScheme::default().with_step(1e-2);
        let z = c(0.3, 0.1);
        let d = fd_derivative(|z| Ok(z.exp()), z, &scheme).unwrap();
        assert!((d - z.exp()).norm() < scheme.step.powi(4) * 10.0);
        let plain = FdScheme { richardson: false, ..scheme };
        let d = fd_derivative(|z| Ok(z.exp()), z, &plain).unwrap();
        assert!((d - z.exp()).norm() < scheme.step.powi(4) * 10.0);
    }

    #[test]
    fn matrix_valued_derivative() {
        let z = c(0.2, -0.5);
        let d = fd_derivative(
            |z| Ok(Mat2::new(z, z * z, z.sin(), c(1.0, 0.0))),
            z,
            &FdScheme::default(),
        )
        .unwrap();
        let exact = Mat2::new(c(1.0, 0.0), z * 2.0, z.cos(), Cx::default());
        assert!((d - exact).norm() < 1e-10);
    }

    #[test]
    fn second_derivative_of_exponential() {
        let z = c(-0.3, 0.7);
        let d = fd_second_derivative(|z| Ok(z.exp()), z, &FdScheme::second_derivative_default())
            .unwrap();
        assert!((d - z.exp()).norm() < 1e-10, "{}", (d - z.exp()).norm());
    }

    #[test]
    fn stencil_failure_is_wrapped() {
        let err = fd_derivative(
            |z: Cx| {
                if z.re > 1.0 {
                    Err(LabError::PoleEvaluation("test".into()))
                } else {
                    Ok(z)
                }
            },
            c(1.0, 0.0),
            &FdScheme::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LabError::StencilFailure { .. }));
    }

    #[test]
    fn rejects_bad_order() {
        assert!(FdScheme::new(3, 1e-4, true).is_err());
        assert!(FdScheme::new(4, 0.0, true).is_err());
    }

    fn poly(coeffs: &[Cx], z: Cx) -> Cx {
        coeffs.iter().rev().fold(Cx::default(), |acc, a| acc * z + a)
    }

    fn poly_deriv(coeffs: &[Cx], z: Cx) -> Cx {
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Cx::default(), |acc, (k, a)| acc * z + a * k as f64)
    }

    proptest! {
        #[test]
        fn exact_on_polynomials_up_to_order(
            order in prop_oneof![Just(2u8), Just(4u8)],
            coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
            zr in -1.0f64..1.0,
            zi in -1.0f64..1.0,
        ) {
            let coeffs: Vec<Cx> = coeffs.into_iter().take(order as usize + 1).map(|(a, b)| c(a, b)).collect();
            let z = c(zr, zi);
            let scheme = FdScheme { order, step: 1e-3, richardson: false };
            let d = fd_derivative(|w| Ok(poly(&coeffs, w)), z, &scheme).unwrap();
            let exact = poly_deriv(&coeffs, z);
            let scale = coeffs.iter().map(|a| a.norm()).sum::<f64>() * (1.0 + z.norm()).powi(order as i32);
            prop_assert!((d - exact).norm() <= 1e-11 * scale.max(exact.norm()));
        }
    }
}

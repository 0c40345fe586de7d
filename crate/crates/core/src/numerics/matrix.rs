use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::{quad_roots, Cx};
use crate::error::{LabError, Result};

/// A complex 2×2 matrix, stored row-major.
///
/// Serialized as four `[re, im]` pairs in the order `a11, a12, a21, a22`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Cx; 4]", into = "[Cx; 4]")]
pub struct Mat2 {
    pub a11: Cx,
    pub a12: Cx,
    pub a21: Cx,
    pub a22: Cx,
}

impl From<[Cx; 4]> for Mat2 {
    fn from(e: [Cx; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }
}

impl From<Mat2> for [Cx; 4] {
    fn from(m: Mat2) -> Self {
        m.entries()
    }
}

impl Mat2 {
    pub const fn new(a11: Cx, a12: Cx, a21: Cx, a22: Cx) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::diag(Cx::new(1.0, 0.0), Cx::new(1.0, 0.0))
    }

    pub fn diag(d1: Cx, d2: Cx) -> Self {
        Mat2::new(d1, Cx::default(), Cx::default(), d2)
    }

    pub fn scalar(s: Cx) -> Self {
        Self::diag(s, s)
    }

    pub fn entries(&self) -> [Cx; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn trace(&self) -> Cx {
        self.a11 + self.a22
    }

    pub fn det(&self) -> Cx {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn adjugate(&self) -> Self {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    /// Inverse, failing when `|det| <= tol · ‖self‖²`.
    pub fn try_inverse(&self, tol: f64) -> Option<Self> {
        let det = self.det();
        let scale = self.norm().powi(2).max(f64::MIN_POSITIVE);
        if !(det.norm() > tol * scale) {
            return None;
        }
        Some(self.adjugate() * (Cx::new(1.0, 0.0) / det))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.try_inverse(1e-300).ok_or_else(|| {
            LabError::InvariantViolated(format!("matrix is singular (det = {})", self.det()))
        })
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// Commutator `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Both eigenvalues, from the characteristic polynomial.
    pub fn eigenvalues(&self) -> (Cx, Cx) {
        quad_roots(Cx::new(1.0, 0.0), -self.trace(), self.det())
            .expect("monic characteristic polynomial")
    }

    pub fn map(&self, f: impl Fn(Cx) -> Cx) -> Self {
        Mat2::new(f(self.a11), f(self.a12), f(self.a21), f(self.a22))
    }

    pub fn col(&self, j: usize) -> [Cx; 2] {
        match j {
            0 => [self.a11, self.a21],
            _ => [self.a12, self.a22],
        }
    }

    pub fn write_to(&self, out: &mut [Cx]) {
        out[..4].copy_from_slice(&self.entries());
    }

    pub fn read_from(src: &[Cx]) -> Self {
        Mat2::new(src[0], src[1], src[2], src[3])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl SubAssign for Mat2 {
    fn sub_assign(&mut self, o: Mat2) {
        *self = *self - o;
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.map(|z| -z)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Cx> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: Cx) -> Mat2 {
        self.map(|z| z * s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.map(|z| z * s)
    }
}

impl Mul<Mat2> for Cx {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

impl std::iter::Sum for Mat2 {
    fn sum<I: Iterator<Item = Mat2>>(iter: I) -> Mat2 {
        iter.fold(Mat2::zero(), |acc, m| acc + m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn inverse_times_self_is_identity() {
        let m = Mat2::new(c(1.0, 2.0), c(-0.5, 0.1), c(0.3, -1.0), c(2.0, 0.0));
        let p = m * m.inverse().unwrap();
        assert!((p - Mat2::identity()).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Mat2::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0));
        assert!(m.try_inverse(1e-12).is_none());
    }

    #[test]
    fn commutator_of_diagonal_matrices_vanishes() {
        let a = Mat2::diag(c(1.0, 1.0), c(-2.0, 0.0));
        let b = Mat2::diag(c(0.5, 0.0), c(3.0, -1.0));
        assert_eq!(a.commutator(&b), Mat2::zero());
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_det() {
        let m = Mat2::new(c(0.2, 0.7), c(1.5, -0.1), c(-0.4, 0.9), c(-1.1, 0.3));
        let (l1, l2) = m.eigenvalues();
        assert!((l1 + l2 - m.trace()).norm() < 1e-14);
        assert!((l1 * l2 - m.det()).norm() < 1e-14);
    }

    #[test]
    fn serializes_as_four_pairs() {
        let m = Mat2::new(c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0],[5.0,6.0],[7.0,8.0]]");
        let back: Mat2 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}

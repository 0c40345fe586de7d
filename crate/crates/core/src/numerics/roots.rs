use super::Cx;
use crate::error::{LabError, Result};

/// Both roots of `a·x² + b·x + c`.
///
/// The larger-magnitude root comes from the standard formula with the sign of
/// the discriminant matched to `b`; the other is recovered as `c / (a·r1)`,
/// which avoids cancellation. The first returned root is the larger one.
pub fn quad_roots(a: Cx, b: Cx, c: Cx) -> Result<(Cx, Cx)> {
    if a.norm() == 0.0 || !a.is_finite() {
        return Err(LabError::DegenerateQuadratic);
    }
    let disc = (b * b - a * c * 4.0).sqrt();
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q.norm() == 0.0 {
        // b = 0 and b² = 4ac imply c = 0: double root at the origin.
        return Ok((Cx::default(), Cx::default()));
    }
    Ok((q / a, c / q))
}

/// Solves the dense complex system `m · x = rhs` by Gaussian elimination with
/// partial pivoting. `m` is row-major `n × n`.
pub fn solve_linear(mut m: Vec<Cx>, mut rhs: Vec<Cx>, n: usize) -> Option<Vec<Cx>> {
    assert_eq!(m.len(), n * n);
    assert_eq!(rhs.len(), n);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm()))
            .unwrap();
        if m[pivot * n + col].norm() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            let r = rhs[col];
            rhs[row] -= f * r;
        }
    }
    let mut x = vec![Cx::default(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Cx {
        Cx::new(re, 0.0)
    }

    fn sorted(r: (Cx, Cx)) -> [Cx; 2] {
        let mut v = [r.0, r.1];
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn factorable_integer_case() {
        let r = sorted(quad_roots(c(1.0), c(-5.0), c(6.0)).unwrap());
        assert!((r[0] - c(2.0)).norm() < 1e-15);
        assert!((r[1] - c(3.0)).norm() < 1e-15);
    }

    #[test]
    fn double_root_at_origin() {
        let (r1, r2) = quad_roots(c(1.0), c(0.0), c(0.0)).unwrap();
        assert_eq!(r1, Cx::default());
        assert_eq!(r2, Cx::default());
    }

    #[test]
    fn zero_leading_coefficient_is_rejected() {
        assert!(matches!(
            quad_roots(c(0.0), c(1.0), c(1.0)),
            Err(LabError::DegenerateQuadratic)
        ));
    }

    #[test]
    fn widely_separated_roots_keep_small_root_accurate() {
        // Small root of x² − 1e8 x + 1 = 0, from x = 1/(1e8 − x) iterated to a
        // fixed point; the large root follows from the product r1·r2 = 1.
        let mut small = 0.0_f64;
        for _ in 0..5 {
            small = 1.0 / (1e8 - small);
        }
        let (big, tiny) = quad_roots(c(1.0), c(-1e8), c(1.0)).unwrap();
        assert!(((tiny.re - small) / small).abs() < 1e-10);
        assert!(((big.re - 1e8) / 1e8).abs() < 1e-12);
    }

    #[test]
    fn linear_solve_recovers_known_solution() {
        let m = vec![c(2.0), c(1.0), Cx::new(0.0, 1.0), c(3.0)];
        let x = [Cx::new(1.0, -1.0), Cx::new(0.5, 2.0)];
        let rhs = vec![m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]];
        let sol = solve_linear(m, rhs, 2).unwrap();
        assert!((sol[0] - x[0]).norm() < 1e-14 && (sol[1] - x[1]).norm() < 1e-14);
    }
}

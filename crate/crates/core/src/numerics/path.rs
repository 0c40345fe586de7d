use serde::{Deserialize, Serialize};

use super::Cx;
use crate::error::{LabError, Result};

/// A polyline in `N` complex variables, together with the minimum distance it
/// must keep from every declared singular locus.
///
/// Paths are never re-routed: a violating path is rejected by [`PathPlan::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPlan<const N: usize> {
    #[serde(with = "waypoints_serde")]
    pub waypoints: Vec<[Cx; N]>,
    pub exclusion_radius: f64,
}

/// Path in a single complex variable (the spectral variable `x`, or `ω`).
pub type XPath = PathPlan<1>;
/// Path in the two free times `(t1, t2)`.
pub type TPath = PathPlan<2>;

/// A singular locus `Σ coeffs[k]·z[k] + offset = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Locus<const N: usize> {
    pub name: String,
    pub coeffs: [Cx; N],
    pub offset: Cx,
}

impl<const N: usize> Locus<N> {
    pub fn eval(&self, z: &[Cx; N]) -> Cx {
        self.coeffs.iter().zip(z).map(|(c, v)| c * v).sum::<Cx>() + self.offset
    }

    /// Minimum of `|ℓ(z(s))|` over the straight segment `a → b`, `s ∈ [0, 1]`.
    pub fn min_on_segment(&self, a: &[Cx; N], b: &[Cx; N]) -> f64 {
        let f0 = self.eval(a);
        let f1 = self.eval(b);
        let df = f1 - f0;
        let denom = df.norm_sqr();
        if denom == 0.0 {
            return f0.norm();
        }
        let s = (-(f0 * df.conj()).re / denom).clamp(0.0, 1.0);
        (f0 + df * s).norm()
    }
}

impl Locus<1> {
    /// The point `z = at`.
    pub fn point(name: impl Into<String>, at: Cx) -> Self {
        Locus {
            name: name.into(),
            coeffs: [Cx::new(1.0, 0.0)],
            offset: -at,
        }
    }
}

impl Locus<2> {
    /// `t_k = value`.
    pub fn coordinate(name: impl Into<String>, k: usize, value: Cx) -> Self {
        let mut coeffs = [Cx::default(); 2];
        coeffs[k] = Cx::new(1.0, 0.0);
        Locus {
            name: name.into(),
            coeffs,
            offset: -value,
        }
    }

    /// `t1 = t2`.
    pub fn diagonal() -> Self {
        Locus {
            name: "t1 = t2".into(),
            coeffs: [Cx::new(1.0, 0.0), Cx::new(-1.0, 0.0)],
            offset: Cx::default(),
        }
    }

    /// The standard singular set of the two-time flows: `t_i ∈ {0, 1}` and `t1 = t2`.
    pub fn time_singularities() -> Vec<Self> {
        let one = Cx::new(1.0, 0.0);
        vec![
            Locus::coordinate("t1 = 0", 0, Cx::default()),
            Locus::coordinate("t1 = 1", 0, one),
            Locus::coordinate("t2 = 0", 1, Cx::default()),
            Locus::coordinate("t2 = 1", 1, one),
            Locus::diagonal(),
        ]
    }
}

impl<const N: usize> PathPlan<N> {
    pub fn new(waypoints: Vec<[Cx; N]>, exclusion_radius: f64) -> Self {
        PathPlan {
            waypoints,
            exclusion_radius,
        }
    }

    /// Straight segment between two points.
    pub fn segment(from: [Cx; N], to: [Cx; N], exclusion_radius: f64) -> Self {
        Self::new(vec![from, to], exclusion_radius)
    }

    pub fn start(&self) -> [Cx; N] {
        self.waypoints[0]
    }

    pub fn end(&self) -> [Cx; N] {
        *self.waypoints.last().expect("non-empty path")
    }

    pub fn segments(&self) -> impl Iterator<Item = (&[Cx; N], &[Cx; N])> {
        self.waypoints.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Euclidean length in `C^N`.
    pub fn length(&self) -> f64 {
        self.segments()
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (y - x).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .sum()
    }

    /// The same polyline traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Self::new(w, self.exclusion_radius)
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn then(&self, other: &Self) -> Self {
        let mut w = self.waypoints.clone();
        w.extend(other.waypoints.iter().skip(1).copied());
        Self::new(w, self.exclusion_radius.min(other.exclusion_radius))
    }

    /// Checks waypoint distinctness and the exclusion radius against every locus.
    pub fn validate(&self, loci: &[Locus<N>]) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(LabError::ConfigInvalid("path has no waypoints".into()));
        }
        if !(self.exclusion_radius > 0.0) {
            return Err(LabError::ConfigInvalid(
                "exclusion radius must be positive".into(),
            ));
        }
        for (i, (a, b)) in self.segments().enumerate() {
            if a == b {
                return Err(LabError::DegeneratePath(i + 1));
            }
        }
        for locus in loci {
            if self.waypoints.len() == 1 {
                let d = locus.eval(&self.waypoints[0]).norm();
                if d < self.exclusion_radius {
                    return Err(LabError::PathViolation {
                        segment: 0,
                        locus: locus.name.clone(),
                        distance: d,
                        radius: self.exclusion_radius,
                    });
                }
            }
            for (i, (a, b)) in self.segments().enumerate() {
                let d = locus.min_on_segment(a, b);
                if d < self.exclusion_radius {
                    return Err(LabError::PathViolation {
                        segment: i,
                        locus: locus.name.clone(),
                        distance: d,
                        radius: self.exclusion_radius,
                    });
                }
            }
        }
        Ok(())
    }
}

mod waypoints_serde {
    use super::Cx;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        w: &[[Cx; N]],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<Cx>> = w.iter().map(|p| p.to_vec()).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<Vec<[Cx; N]>, D::Error> {
        let v: Vec<Vec<Cx>> = Vec::deserialize(d)?;
        v.into_iter()
            .map(|p| {
                <[Cx; N]>::try_from(p.as_slice()).map_err(|_| {
                    serde::de::Error::custom(format!(
                        "waypoint has {} coordinates, expected {}",
                        p.len(),
                        N
                    ))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn segment_distance_to_point() {
        let l = Locus::point("origin", Cx::default());
        assert!((l.min_on_segment(&[c(-1.0, 0.5)], &[c(1.0, 0.5)]) - 0.5).abs() < 1e-15);
        assert!((l.min_on_segment(&[c(1.0, 0.0)], &[c(2.0, 0.0)]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_path_through_diagonal() {
        let p = TPath::segment([c(0.3, 0.2), c(-0.4, 0.1)], [c(-0.4, 0.1), c(0.3, 0.2)], 0.05);
        let err = p.validate(&Locus::time_singularities()).unwrap_err();
        assert!(matches!(err, LabError::PathViolation { ref locus, .. } if locus == "t1 = t2"));
    }

    #[test]
    fn rejects_repeated_waypoint() {
        let p = XPath::new(vec![[c(2.0, 0.0)], [c(2.0, 0.0)]], 0.1);
        assert!(matches!(p.validate(&[]), Err(LabError::DegeneratePath(1))));
    }

    #[test]
    fn accepts_clear_path() {
        let p = TPath::new(
            vec![[c(0.3, 0.3), c(-0.5, 0.4)], [c(0.4, 0.5), c(-0.5, 0.6)]],
            0.05,
        );
        p.validate(&Locus::time_singularities()).unwrap();
        assert!((p.length() - (0.05_f64 + 0.04).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let p = TPath::new(vec![[c(0.3, 0.3), c(-0.5, 0.4)], [c(0.4, 0.5), c(-0.5, 0.6)]], 0.05);
        let s = serde_json::to_string(&p).unwrap();
        let back: TPath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}

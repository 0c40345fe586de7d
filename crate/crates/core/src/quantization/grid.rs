use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gauge::zeta_eta_map;
use crate::error::{LabError, Result};
use crate::numerics::Cx;

/// Sampling box and exclusions for evaluation grids. The default box lies
/// in the lower half-plane, so every straight segment from a base point in
/// the same box stays clear of poles in the closed upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    /// Minimum `|x − y|`.
    pub min_separation: f64,
    /// Minimum distance of every point from every pole and from each `avoid` point.
    pub min_pole_distance: f64,
    /// Minimum `|1 − ζ − η|`, keeping the inverse change of variables regular.
    pub min_inverse_margin: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_range: (-1.0, 1.8),
            im_range: (-1.5, -0.35),
            min_separation: 0.35,
            min_pole_distance: 0.3,
            min_inverse_margin: 0.05,
            seed: 7,
        }
    }
}

impl GridSpec {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Cx {
        Cx::new(
            rng.gen_range(self.re_range.0..self.re_range.1),
            rng.gen_range(self.im_range.0..self.im_range.1),
        )
    }

    fn clear(&self, z: Cx, avoid: &[Cx]) -> bool {
        avoid.iter().all(|a| (z - a).norm() >= self.min_pole_distance)
    }
}

/// `n` pairs `(x, y)` for the given poles.
pub fn pair_grid(spec: &GridSpec, n: usize, times: [Cx; 4]) -> Result<Vec<(Cx, Cx)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * (n + 1) {
            return Err(LabError::ConfigInvalid("grid constraints cannot be met in the sampling box".into()));
        }
        let (x, y) = (spec.draw(&mut rng), spec.draw(&mut rng));
        if (x - y).norm() < spec.min_separation || !spec.clear(x, &times) || !spec.clear(y, &times) {
            continue;
        }
        let (z, e) = zeta_eta_map(x, y, times[0], times[1])?;
        if (Cx::new(1.0, 0.0) - z - e).norm() < spec.min_inverse_margin {
            continue;
        }
        out.push((x, y));
    }
    Ok(out)
}

/// `n` points of the spectral plane avoiding the poles and `avoid`.
pub fn spectral_samples(spec: &GridSpec, n: usize, times: [Cx; 4], avoid: &[Cx]) -> Result<Vec<Cx>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * (n + 1) {
            return Err(LabError::ConfigInvalid("sample constraints cannot be met in the sampling box".into()));
        }
        let x = spec.draw(&mut rng);
        if spec.clear(x, &times) && spec.clear(x, avoid) {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::re;

    #[test]
    fn grids_are_reproducible_and_respect_exclusions() {
        let times = [Cx::new(0.35, 0.45), Cx::new(-0.4, 0.3), re(1.0), re(0.0)];
        let spec = GridSpec::default();
        let a = pair_grid(&spec, 30, times).unwrap();
        assert_eq!(a, pair_grid(&spec, 30, times).unwrap());
        for (x, y) in &a {
            assert!((x - y).norm() >= spec.min_separation);
            for t in times {
                assert!((x - t).norm() >= spec.min_pole_distance && (y - t).norm() >= spec.min_pole_distance);
            }
        }
        let s = spectral_samples(&spec, 10, times, &[Cx::new(0.5, -0.5)]).unwrap();
        assert!(s.iter().all(|x| (x - Cx::new(0.5, -0.5)).norm() >= spec.min_pole_distance));
        let tight = GridSpec {
            re_range: (0.0, 0.01),
            im_range: (-0.01, 0.0),
            ..spec
        };
        assert!(pair_grid(&tight, 3, times).is_err());
    }
}

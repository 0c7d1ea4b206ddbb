use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::jet::MAX_DIM;

/// Fraction of each box side kept clear when sampling.
pub const SAMPLE_MARGIN: f64 = 0.01;

/// A coordinate chart: names, a closed sampling box and a sampling seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl ChartSpec {
    pub fn new(coords: Vec<String>, bounds: Vec<(f64, f64)>, seed: u64) -> Result<Self> {
        let chart = ChartSpec { coords, bounds, seed };
        chart.validate()?;
        Ok(chart)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.coords.len();
        if n == 0 || n > MAX_DIM {
            return Err(GeomError::Dimension(n));
        }
        if self.bounds.len() != n {
            return Err(GeomError::Arity {
                expected: n,
                got: self.bounds.len(),
            });
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeomError::EmptyBox(i));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn with_seed(&self, seed: u64) -> ChartSpec {
        ChartSpec {
            seed,
            ..self.clone()
        }
    }

    /// `count` points drawn uniformly from the box shrunk by
    /// [`SAMPLE_MARGIN`] on every side. Identical for identical seed and box.
    pub fn sample_points(&self, count: usize) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        if count == 0 {
            return Err(GeomError::InvalidArgument("point count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let inner: Vec<(f64, f64)> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                (lo + SAMPLE_MARGIN * w, hi - SAMPLE_MARGIN * w)
            })
            .collect();
        Ok((0..count)
            .map(|_| {
                inner
                    .iter()
                    .map(|&(lo, hi)| {
                        let u: f64 = rng.sample(Open01);
                        lo + u * (hi - lo)
                    })
                    .collect()
            })
            .collect())
    }

    /// Is `p` inside the closed box?
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(bounds: Vec<(f64, f64)>, seed: u64) -> ChartSpec {
        let coords = (0..bounds.len()).map(|i| format!("u{i}")).collect();
        ChartSpec::new(coords, bounds, seed).unwrap()
    }

    #[test]
    fn points_are_interior_and_reproducible() {
        let c = chart(vec![(0.0, 1.0)], 42);
        let a = c.sample_points(3).unwrap();
        assert_eq!(a.len(), 3);
        for p in &a {
            assert!(p[0] > 0.01 && p[0] < 0.99);
        }
        let b = c.sample_points(3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x[0].to_bits(), y[0].to_bits());
        }
    }

    #[test]
    fn two_dimensional_box() {
        let c = chart(vec![(0.5, 2.0), (0.5, 2.0)], 7);
        let p = c.sample_points(1).unwrap();
        assert_eq!(p[0].len(), 2);
        assert!(p[0].iter().all(|&x| x > 0.515 && x < 1.985));
    }

    #[test]
    fn different_seeds_differ() {
        let a = chart(vec![(0.0, 1.0)], 1).sample_points(2).unwrap();
        let b = chart(vec![(0.0, 1.0)], 2).sample_points(2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn invalid_boxes_are_rejected() {
        assert_eq!(
            ChartSpec::new(vec!["x".into()], vec![(1.0, 1.0)], 0),
            Err(GeomError::EmptyBox(0))
        );
        assert!(ChartSpec::new(vec![], vec![], 0).is_err());
        let c = chart(vec![(0.0, 1.0)], 0);
        assert!(c.sample_points(0).is_err());
    }
}

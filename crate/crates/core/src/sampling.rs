//! Seeded sampling of points and tangent vectors.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::jet::Point;

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(GeomError::DimensionMismatch("box bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(GeomError::Validation("box bounds must be finite with lo <= hi".into()));
        }
        Ok(SampleBox { lo, hi })
    }

    /// `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        SampleBox { lo: vec![-half; dim], hi: vec![half; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }
}

/// Deterministic random source; one stream per seed.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.gen_range(lo..hi)
        }
    }

    pub fn point(&mut self, b: &SampleBox) -> Point {
        Point::new(b.lo.iter().zip(&b.hi).map(|(&lo, &hi)| self.uniform(lo, hi)).collect())
    }

    pub fn points(&mut self, b: &SampleBox, count: usize) -> Vec<Point> {
        (0..count).map(|_| self.point(b)).collect()
    }

    /// Components uniform in `[-1, 1]`.
    pub fn vector(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.uniform(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let b = SampleBox::cube(3, 2.0);
        let a: Vec<_> = Sampler::new(7).points(&b, 5);
        let c: Vec<_> = Sampler::new(7).points(&b, 5);
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(&p.coords)));
        assert_ne!(a, Sampler::new(8).points(&b, 5));
    }

    #[test]
    fn degenerate_box_and_bad_bounds() {
        let b = SampleBox::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(Sampler::new(0).point(&b).coords, vec![1.0]);
        assert!(SampleBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(SampleBox::new(vec![0.0], vec![]).is_err());
    }

    #[test]
    fn vectors_in_unit_cube() {
        let v = Sampler::new(1).vector(50);
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}

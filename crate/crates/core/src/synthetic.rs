//! Seeded synthetic datasets for benchmarks and detection experiments.

use crate::dataset::{LabeledPoint, ValQuery};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn standard_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    (x, y)
}

/// 2-D standard Gaussian points labeled by the sign of the feature sum.
pub fn gaussian_sign(n: usize, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (x, y) = standard_pair(&mut rng);
            LabeledPoint::new(vec![x, y], u32::from(x + y > 0.0), i)
        })
        .collect()
}

/// Queries drawn from the same sign-labeled Gaussian.
pub fn gaussian_sign_queries(n: usize, seed: u64) -> Vec<ValQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (x, y) = standard_pair(&mut rng);
            ValQuery::new(vec![x, y], u32::from(x + y > 0.0))
        })
        .collect()
}

/// Balanced two-class data: class 0 centered at `(-separation/2, 0)`,
/// class 1 at `(+separation/2, 0)`, unit variance.
pub fn two_gaussians(n: usize, separation: f64, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = (i % 2) as u32;
            let center = if class == 0 {
                -separation / 2.0
            } else {
                separation / 2.0
            };
            let (x, y) = standard_pair(&mut rng);
            LabeledPoint::new(vec![x + center, y], class, i)
        })
        .collect()
}

/// Queries drawn from the same two-Gaussian mixture.
pub fn two_gaussian_queries(n: usize, separation: f64, seed: u64) -> Vec<ValQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = (i % 2) as u32;
            let center = if class == 0 {
                -separation / 2.0
            } else {
                separation / 2.0
            };
            let (x, y) = standard_pair(&mut rng);
            ValQuery::new(vec![x + center, y], class)
        })
        .collect()
}

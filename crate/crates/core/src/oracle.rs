//! Subset utilities and ground-truth attribution baselines: full subset
//! enumeration and Monte Carlo permutation sampling.
//!
//! The enumeration path is the correctness oracle for every other engine in
//! the crate, so it stays as close to the defining average-of-marginal-
//! contributions formula as possible and does nothing clever.

use crate::combinatorics::{binom_f64, KahanSum};
use crate::dataset::{DiscreteWeights, SortedDataset};
use crate::error::{Error, Result};
use crate::scores::{ScoreMethod, ShapleyScores};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hard cap for subset enumeration; the cost is `N * 2^(N-1)` utility calls.
pub const ENUMERATION_LIMIT: usize = 20;

/// A subset of sorted positions, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subset {
    mask: u64,
}

impl Subset {
    pub const EMPTY: Subset = Subset { mask: 0 };

    pub fn from_mask(mask: u64) -> Self {
        Subset { mask }
    }

    pub fn from_positions(positions: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &p in positions {
            if p >= n || p >= 64 {
                return Err(Error::BadSubsetIndex(p));
            }
            let bit = 1u64 << p;
            if mask & bit != 0 {
                return Err(Error::BadSubsetIndex(p));
            }
            mask |= bit;
        }
        Ok(Subset { mask })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.mask >> pos & 1 == 1
    }

    pub fn with(&self, pos: usize) -> Subset {
        Subset {
            mask: self.mask | 1 << pos,
        }
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Member positions in ascending order, i.e. by distance to the query.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&p| self.contains(p))
    }
}

/// KNN size and class count for the oracle evaluators.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub k: usize,
    pub num_classes: u32,
}

impl OracleConfig {
    pub fn new(k: usize, num_classes: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::BadK(k));
        }
        if num_classes < 2 {
            return Err(Error::NeedTwoClasses(num_classes));
        }
        Ok(Self { k, num_classes })
    }

    fn check_labels(&self, ds: &SortedDataset) -> Result<()> {
        for p in ds.points() {
            if p.label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label: p.label,
                    classes: self.num_classes,
                });
            }
        }
        if ds.query().label >= self.num_classes {
            return Err(Error::LabelOutOfRange {
                label: ds.query().label,
                classes: self.num_classes,
            });
        }
        Ok(())
    }
}

/// Correctness of weighted hard-label KNN on the query, over the `min(K, |S|)`
/// nearest members of `S`. Ties count as correct; the empty subset is an
/// all-zero tie and scores 1.
pub fn utility_multiclass(
    s: Subset,
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
) -> u8 {
    let mut sums: Vec<(u32, u64)> = Vec::with_capacity(cfg.k);
    let query_label = ds.query().label;
    for pos in s.members().take(cfg.k) {
        let label = ds.label(pos);
        let unit = w.unit(pos) as u64;
        match sums.iter_mut().find(|(l, _)| *l == label) {
            Some((_, acc)) => *acc += unit,
            None => sums.push((label, unit)),
        }
    }
    let query_sum = sums
        .iter()
        .find(|(l, _)| *l == query_label)
        .map_or(0, |&(_, s)| s);
    let max_sum = sums.iter().map(|&(_, s)| s).max().unwrap_or(0);
    u8::from(query_sum >= max_sum)
}

/// Binary-classification form: indicator that the signed weights of the
/// `min(K, |S|)` nearest members sum to at least zero. Agrees with
/// `utility_multiclass` on every two-class input.
pub fn utility_binary(
    s: Subset,
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
) -> Result<u8> {
    if cfg.num_classes != 2 {
        return Err(Error::NotBinary(cfg.num_classes as usize));
    }
    let _ = ds;
    Ok(utility_binary_units(s, w, cfg.k))
}

/// Signed-sum indicator on grid units; shared with the multiclass reduction.
pub(crate) fn utility_binary_units(s: Subset, w: &DiscreteWeights, k: usize) -> u8 {
    let total: i64 = s.members().take(k).map(|pos| w.signed_unit(pos)).sum();
    u8::from(total >= 0)
}

/// Exact Shapley values of an arbitrary utility by enumeration of all
/// subsets. `utility` is evaluated once per mask; marginal contributions are
/// averaged per subset size with compensated sums.
pub fn enumerate_shapley(n: usize, utility: impl Fn(Subset) -> f64) -> Result<Vec<f64>> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLargeForEnumeration {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let full = 1u64 << n;
    let values: Vec<f64> = (0..full).map(|m| utility(Subset::from_mask(m))).collect();

    let mut scores = vec![0.0; n];
    for (i, score) in scores.iter_mut().enumerate() {
        let bit = 1u64 << i;
        let mut by_size = vec![KahanSum::new(); n];
        for mask in 0..full {
            if mask & bit != 0 {
                continue;
            }
            let size = mask.count_ones() as usize;
            by_size[size].add(values[(mask | bit) as usize] - values[mask as usize]);
        }
        let mut acc = KahanSum::new();
        for (size, sum) in by_size.iter().enumerate() {
            acc.add(sum.value() / binom_f64((n - 1) as u64, size as u64));
        }
        *score = acc.value() / n as f64;
    }
    Ok(scores)
}

/// Ground-truth Shapley values under the hard-label multiclass utility.
pub fn brute_force_shapley(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
) -> Result<ShapleyScores> {
    cfg.check_labels(ds)?;
    let per_pos = enumerate_shapley(ds.len(), |s| utility_multiclass(s, ds, w, cfg) as f64)?;
    Ok(ShapleyScores::from_positions(
        ds,
        ScoreMethod::BruteForce,
        &per_pos,
    ))
}

/// Permutation count for the Hoeffding bound: each estimate is within
/// `epsilon` of the exact value with probability at least `1 - delta`.
pub fn permutation_sample_count(n: usize, epsilon: f64, delta: f64) -> usize {
    let t = 2.0 / (epsilon * epsilon) * (2.0 * n as f64 / delta).ln();
    t.ceil().max(1.0) as usize
}

/// Permutation-sampling Monte Carlo estimate of the Shapley values under the
/// multiclass utility. Deterministic for a fixed seed.
pub fn monte_carlo_shapley(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<ShapleyScores> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::BadEpsilon(epsilon));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::BadDelta(delta));
    }
    cfg.check_labels(ds)?;
    let n = ds.len();
    if n == 0 {
        return Ok(ShapleyScores::exact_valued(
            ScoreMethod::MonteCarlo,
            Vec::new(),
        ));
    }

    let rounds = permutation_sample_count(n, epsilon, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut totals = vec![KahanSum::new(); n];
    // Members of the growing prefix, kept sorted by position so the k nearest
    // are a prefix slice.
    let mut prefix: Vec<usize> = Vec::with_capacity(n);

    for _ in 0..rounds {
        order.shuffle(&mut rng);
        prefix.clear();
        let mut last = utility_of_sorted(&prefix, ds, w, cfg) as f64;
        for &pos in &order {
            let at = prefix.partition_point(|&q| q < pos);
            prefix.insert(at, pos);
            let next = utility_of_sorted(&prefix, ds, w, cfg) as f64;
            totals[pos].add(next - last);
            last = next;
        }
    }

    let per_pos: Vec<f64> = totals
        .iter()
        .map(|t| t.value() / rounds as f64)
        .collect();
    Ok(ShapleyScores::from_positions(
        ds,
        ScoreMethod::MonteCarlo,
        &per_pos,
    ))
}

fn utility_of_sorted(
    members: &[usize],
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
) -> u8 {
    let mut sums: Vec<(u32, u64)> = Vec::with_capacity(cfg.k);
    let query_label = ds.query().label;
    for &pos in members.iter().take(cfg.k) {
        let label = ds.label(pos);
        let unit = w.unit(pos) as u64;
        match sums.iter_mut().find(|(l, _)| *l == label) {
            Some((_, acc)) => *acc += unit,
            None => sums.push((label, unit)),
        }
    }
    let query_sum = sums
        .iter()
        .find(|(l, _)| *l == query_label)
        .map_or(0, |&(_, s)| s);
    let max_sum = sums.iter().map(|&(_, s)| s).max().unwrap_or(0);
    u8::from(query_sum >= max_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::line_instance;

    #[test]
    fn empty_subset_scores_one() {
        let (ds, w) = line_instance(&[0, 1], &[1.0, 1.0], 0, 3);
        let cfg = OracleConfig::new(3, 2).unwrap();
        assert_eq!(utility_multiclass(Subset::EMPTY, &ds, &w, &cfg), 1);
        assert_eq!(utility_binary(Subset::EMPTY, &ds, &w, &cfg).unwrap(), 1);
    }

    #[test]
    fn two_dogs_one_cat_outvote_the_cat_query() {
        // Query label "cat" = 0; nearest three are dog, dog, cat with equal
        // weights, so the dogs win and the utility is 0.
        let (ds, w) = line_instance(&[1, 1, 0], &[1.0, 1.0, 1.0], 0, 3);
        let cfg = OracleConfig::new(3, 2).unwrap();
        let s = Subset::from_positions(&[0, 1, 2], 3).unwrap();
        assert_eq!(utility_multiclass(s, &ds, &w, &cfg), 0);
    }

    #[test]
    fn single_matching_point_scores_one() {
        let (ds, w) = line_instance(&[0], &[0.6], 0, 3);
        let cfg = OracleConfig::new(1, 2).unwrap();
        let s = Subset::from_positions(&[0], 1).unwrap();
        assert_eq!(utility_multiclass(s, &ds, &w, &cfg), 1);
    }

    #[test]
    fn single_opposite_point_scores_zero_under_binary_form() {
        let (ds, w) = line_instance(&[1], &[1.0], 0, 3);
        let cfg = OracleConfig::new(2, 2).unwrap();
        let s = Subset::from_positions(&[0], 1).unwrap();
        assert_eq!(utility_binary(s, &ds, &w, &cfg).unwrap(), 0);
    }

    #[test]
    fn binary_utility_rejects_multiclass_config() {
        let (ds, w) = line_instance(&[0, 1], &[1.0, 1.0], 0, 3);
        let cfg = OracleConfig::new(2, 3).unwrap();
        assert!(matches!(
            utility_binary(Subset::EMPTY, &ds, &w, &cfg),
            Err(Error::NotBinary(3))
        ));
    }

    #[test]
    fn binary_equals_multiclass_exhaustively() {
        // Every subset of a handful of mixed instances.
        let cases: &[(&[u32], &[f64], u32)] = &[
            (&[0, 1, 1, 0, 1], &[1.0, 0.9, 0.7, 0.5, 0.2], 0),
            (&[1, 1, 0, 0, 0, 1], &[1.0, 1.0, 0.8, 0.4, 0.4, 0.1], 1),
            (&[0, 0, 0], &[0.5, 0.5, 0.0], 1),
        ];
        for &(labels, raw, q) in cases {
            let (ds, w) = line_instance(labels, raw, q, 2);
            for k in 1..=4 {
                let cfg = OracleConfig::new(k, 2).unwrap();
                for mask in 0..(1u64 << labels.len()) {
                    let s = Subset::from_mask(mask);
                    assert_eq!(
                        utility_binary(s, &ds, &w, &cfg).unwrap(),
                        utility_multiclass(s, &ds, &w, &cfg),
                        "labels {labels:?} k {k} mask {mask:b}"
                    );
                }
            }
        }
    }

    #[test]
    fn brute_force_single_point_instances() {
        // A lone matching point changes nothing: v({z}) = v(empty) = 1.
        let (ds, w) = line_instance(&[0], &[1.0], 0, 3);
        let cfg = OracleConfig::new(1, 2).unwrap();
        let scores = brute_force_shapley(&ds, &w, &cfg).unwrap();
        assert_eq!(scores.values, vec![0.0]);

        // A lone opposite point drops the utility from 1 to 0.
        let (ds, w) = line_instance(&[1], &[1.0], 0, 3);
        let scores = brute_force_shapley(&ds, &w, &cfg).unwrap();
        assert_eq!(scores.values, vec![-1.0]);
    }

    #[test]
    fn brute_force_two_point_split() {
        // K=1: nearer matching point with weight 1, farther opposite point
        // with weight 1 give (0.5, -0.5) by direct enumeration of 4 subsets.
        let (ds, w) = line_instance(&[0, 1], &[1.0, 1.0], 0, 3);
        let cfg = OracleConfig::new(1, 2).unwrap();
        let scores = brute_force_shapley(&ds, &w, &cfg).unwrap();
        assert!((scores.values[0] - 0.5).abs() < 1e-15);
        assert!((scores.values[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn brute_force_respects_size_guard() {
        let labels = vec![0u32; 21];
        let raw = vec![1.0; 21];
        let (ds, w) = line_instance(&labels, &raw, 0, 1);
        let cfg = OracleConfig::new(1, 2).unwrap();
        assert!(matches!(
            brute_force_shapley(&ds, &w, &cfg),
            Err(Error::TooLargeForEnumeration { .. })
        ));
    }

    #[test]
    fn sample_count_bound_arithmetic() {
        // eps = 2, delta = 0.5, N = 1 -> ceil(0.5 * ln 4) = 1 permutation.
        assert_eq!(permutation_sample_count(1, 2.0, 0.5), 1);
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let (ds, w) = line_instance(&[0, 1, 0, 1, 0], &[1.0, 0.8, 0.6, 0.4, 0.2], 0, 3);
        let cfg = OracleConfig::new(3, 2).unwrap();
        let a = monte_carlo_shapley(&ds, &w, &cfg, 0.5, 0.2, 42).unwrap();
        let b = monte_carlo_shapley(&ds, &w, &cfg, 0.5, 0.2, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = monte_carlo_shapley(&ds, &w, &cfg, 0.5, 0.2, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn monte_carlo_single_point_estimate_is_discrete() {
        let (ds, w) = line_instance(&[1], &[1.0], 0, 3);
        let cfg = OracleConfig::new(1, 2).unwrap();
        let scores = monte_carlo_shapley(&ds, &w, &cfg, 2.0, 0.5, 7).unwrap();
        // One permutation, marginal contribution in {-1, 0, 1}; here -1.
        assert_eq!(scores.values, vec![-1.0]);
    }
}

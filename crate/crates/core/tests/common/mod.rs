#![allow(dead_code)] // each test binary uses its own subset of these helpers

//! Shared fixtures and independent enumeration oracles for integration
//! tests. Everything here counts subsets directly from definitions; none of
//! it shares code with the engines it checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wknn_shapley::{
    discretize, sort_by_distance, DiscreteWeights, LabeledPoint, Metric, OracleConfig,
    SortedDataset, Subset, ValQuery,
};

/// Points on a line at distances 1, 2, ... from the query, given labels and
/// raw weights in sorted order.
pub fn line_instance(
    labels: &[u32],
    raw: &[f64],
    query_label: u32,
    bits: u32,
) -> (SortedDataset, DiscreteWeights) {
    let points: Vec<LabeledPoint> = labels
        .iter()
        .enumerate()
        .map(|(j, &l)| LabeledPoint::new(vec![(j + 1) as f64], l, j))
        .collect();
    let ds = sort_by_distance(
        points,
        ValQuery::new(vec![0.0], query_label),
        Metric::Euclidean,
    )
    .unwrap();
    let w = discretize(&ds, raw, bits).unwrap();
    (ds, w)
}

pub struct SweepInstance {
    pub ds: SortedDataset,
    pub w: DiscreteWeights,
    pub k: usize,
    pub bits: u32,
}

/// Random two-class instance with monotone non-increasing weights:
/// N in [4, 12], K in [1, 5], b in [1, 3].
pub fn sweep_instance(rng: &mut ChaCha8Rng) -> SweepInstance {
    let n: usize = rng.random_range(4..=12);
    let k: usize = rng.random_range(1..=5);
    let bits: u32 = rng.random_range(1..=3);
    let query_label: u32 = rng.random_range(0..2);
    let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let mut raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (ds, w) = line_instance(&labels, &raw, query_label, bits);
    SweepInstance { ds, w, k, bits }
}

/// Direct subset count behind each table entry: size-`level` subsets
/// avoiding the target whose farthest member sits at position `m` and whose
/// signed weight units sum to `sum_units`. Valid for `level <= K-1`, where
/// membership in the K nearest is automatic.
pub fn count_table_entry_by_enumeration(
    w: &DiscreteWeights,
    target: usize,
    m: usize,
    level: usize,
    sum_units: i64,
) -> u64 {
    let n = w.len();
    let mut count = 0u64;
    for mask in 0u64..(1 << n) {
        if mask & (1 << target) != 0 {
            continue;
        }
        if mask.count_ones() as usize != level {
            continue;
        }
        if 63 - mask.leading_zeros() as usize != m {
            continue;
        }
        let sum: i64 = (0..n)
            .filter(|&p| mask & (1 << p) != 0)
            .map(|p| w.signed_unit(p))
            .sum();
        if sum == sum_units {
            count += 1;
        }
    }
    count
}

/// Number of size-`level` subsets avoiding the target whose utility flips
/// when the target is added, counted straight from marginal contributions of
/// the binary utility.
pub fn count_flips_by_enumeration(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    k: usize,
    target: usize,
    level: usize,
) -> u64 {
    let n = ds.len();
    let cfg = OracleConfig::new(k, 2).unwrap();
    let expected_mc: i32 = if ds.matches_query(target) { 1 } else { -1 };
    let mut count = 0u64;
    for mask in 0u64..(1 << n) {
        if mask & (1 << target) != 0 {
            continue;
        }
        if mask.count_ones() as usize != level {
            continue;
        }
        let s = Subset::from_mask(mask);
        let with = wknn_shapley::utility_binary(s.with(target), ds, w, &cfg).unwrap() as i32;
        let without = wknn_shapley::utility_binary(s, ds, w, &cfg).unwrap() as i32;
        if with - without == expected_mc {
            count += 1;
        }
    }
    count
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

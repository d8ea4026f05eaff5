//! Labeled points, distance-sorted datasets, kernel weights, and fixed-grid
//! weight discretization.
//!
//! Everything downstream assumes the training set is sorted by distance to a
//! single validation query, with ties broken by original index, and that
//! weights live on the grid `{g / (2^b - 1) : g = 0..2^b - 1}`. The quantized
//! weights are carried as integer grid units so that later partial-sum
//! bookkeeping is exact.

use crate::error::{Error, Result};
use std::collections::HashSet;

/// One training point. `orig_index` is its position in the input file and is
/// the index under which scores are reported.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: u32,
    pub orig_index: usize,
}

impl LabeledPoint {
    pub fn new(features: Vec<f64>, label: u32, orig_index: usize) -> Self {
        Self {
            features,
            label,
            orig_index,
        }
    }
}

/// A validation query with its ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct ValQuery {
    pub features: Vec<f64>,
    pub label: u32,
}

impl ValQuery {
    pub fn new(features: Vec<f64>, label: u32) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
}

/// Weight kernels. All three are non-increasing in distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `exp(-d)`
    Rbf,
    /// `(d_max - d_i) / (d_max - d_min)`; falls back to uniform when all
    /// distances are equal.
    NormDist,
    /// Constant 1; reduces weighted KNN to unweighted KNN.
    Uniform,
}

impl Kernel {
    pub fn parse(s: &str) -> Option<Kernel> {
        match s {
            "rbf" => Some(Kernel::Rbf),
            "norm-dist" | "norm_dist" => Some(Kernel::NormDist),
            "uniform" => Some(Kernel::Uniform),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Rbf => "rbf",
            Kernel::NormDist => "norm-dist",
            Kernel::Uniform => "uniform",
        }
    }
}

/// Training points sorted by non-decreasing distance to a query, ties broken
/// by original index. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SortedDataset {
    points: Vec<LabeledPoint>,
    distances: Vec<f64>,
    query: ValQuery,
}

impl SortedDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn query(&self) -> &ValQuery {
        &self.query
    }

    pub fn label(&self, pos: usize) -> u32 {
        self.points[pos].label
    }

    pub fn orig_index(&self, pos: usize) -> usize {
        self.points[pos].orig_index
    }

    /// Whether the point at sorted position `pos` carries the query label.
    pub fn matches_query(&self, pos: usize) -> bool {
        self.points[pos].label == self.query.label
    }

    /// Scores are reported against original indices; the output vector is
    /// sized to hold the largest one.
    pub fn score_len(&self) -> usize {
        self.points
            .iter()
            .map(|p| p.orig_index + 1)
            .max()
            .unwrap_or(0)
    }

    /// Number of distinct labels among the points and the query.
    pub fn distinct_labels(&self) -> usize {
        let mut labels: HashSet<u32> = self.points.iter().map(|p| p.label).collect();
        labels.insert(self.query.label);
        labels.len()
    }

    /// Order-preserving restriction to the given sorted positions.
    pub fn restrict(&self, keep: &[usize]) -> SortedDataset {
        SortedDataset {
            points: keep.iter().map(|&p| self.points[p].clone()).collect(),
            distances: keep.iter().map(|&p| self.distances[p]).collect(),
            query: self.query.clone(),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sort `points` by distance to `query`, ties broken by original index.
pub fn sort_by_distance(
    points: Vec<LabeledPoint>,
    query: ValQuery,
    metric: Metric,
) -> Result<SortedDataset> {
    let dim = query.features.len();
    if dim == 0 {
        return Err(Error::EmptyFeatures { index: usize::MAX });
    }
    if query.features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteFeature { index: usize::MAX });
    }
    let mut seen = HashSet::new();
    for p in &points {
        if p.features.is_empty() {
            return Err(Error::EmptyFeatures {
                index: p.orig_index,
            });
        }
        if p.features.len() != dim {
            return Err(Error::DimensionMismatch {
                index: p.orig_index,
                expected: dim,
                got: p.features.len(),
            });
        }
        if p.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteFeature {
                index: p.orig_index,
            });
        }
        if !seen.insert(p.orig_index) {
            return Err(Error::DuplicateOrigIndex(p.orig_index));
        }
    }

    let Metric::Euclidean = metric;
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(j, p)| (euclidean(&p.features, &query.features), j))
        .collect();
    order.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("distances are finite")
            .then(points[a.1].orig_index.cmp(&points[b.1].orig_index))
    });

    let distances: Vec<f64> = order.iter().map(|&(d, _)| d).collect();
    let sorted: Vec<LabeledPoint> = order.iter().map(|&(_, j)| points[j].clone()).collect();
    Ok(SortedDataset {
        points: sorted,
        distances,
        query,
    })
}

/// Raw kernel weights in `[0, 1]`, one per sorted position.
#[derive(Debug, Clone)]
pub struct AssignedWeights {
    pub raw: Vec<f64>,
    /// Set when the norm-dist kernel was requested but all distances are
    /// equal, which makes it undefined; uniform weights were used instead.
    pub uniform_fallback: bool,
}

/// Evaluate a weight kernel over a sorted dataset.
pub fn assign_weights(ds: &SortedDataset, kernel: Kernel) -> AssignedWeights {
    let d = ds.distances();
    let (raw, uniform_fallback) = match kernel {
        Kernel::Uniform => (vec![1.0; d.len()], false),
        Kernel::Rbf => (d.iter().map(|&x| (-x).exp()).collect(), false),
        Kernel::NormDist => {
            if d.is_empty() {
                (Vec::new(), false)
            } else {
                let (lo, hi) = (d[0], d[d.len() - 1]);
                if hi - lo <= 0.0 {
                    (vec![1.0; d.len()], true)
                } else {
                    (d.iter().map(|&x| (hi - x) / (hi - lo)).collect(), false)
                }
            }
        }
    };
    AssignedWeights {
        raw,
        uniform_fallback,
    }
}

/// Per-point weights on the grid `{g / (2^b - 1)}`, plus the label-signed
/// view used by the binary utility. Quantized values are held as integer
/// grid units; `signed` negates the unit count for points whose label
/// differs from the query label.
#[derive(Debug, Clone)]
pub struct DiscreteWeights {
    bits: u32,
    raw: Vec<f64>,
    units: Vec<u32>,
    matches: Vec<bool>,
}

impl DiscreteWeights {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of grid levels, `2^bits`.
    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    /// Grid resolution `1 / (2^bits - 1)`.
    pub fn step(&self) -> f64 {
        1.0 / (self.levels() - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Quantized weight in grid units, `0..=2^bits - 1`.
    pub fn unit(&self, pos: usize) -> u32 {
        self.units[pos]
    }

    /// Signed quantized weight in grid units: positive for points matching
    /// the query label, negative otherwise.
    pub fn signed_unit(&self, pos: usize) -> i64 {
        let u = self.units[pos] as i64;
        if self.matches[pos] {
            u
        } else {
            -u
        }
    }

    pub fn matches_query(&self, pos: usize) -> bool {
        self.matches[pos]
    }

    pub fn quantized(&self, pos: usize) -> f64 {
        self.units[pos] as f64 * self.step()
    }

    pub fn signed(&self, pos: usize) -> f64 {
        self.signed_unit(pos) as f64 * self.step()
    }

    pub fn quantized_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.quantized(j)).collect()
    }

    pub fn signed_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.signed(j)).collect()
    }

    /// Order-preserving restriction to the given positions.
    pub fn restrict(&self, keep: &[usize]) -> DiscreteWeights {
        DiscreteWeights {
            bits: self.bits,
            raw: keep.iter().map(|&p| self.raw[p]).collect(),
            units: keep.iter().map(|&p| self.units[p]).collect(),
            matches: keep.iter().map(|&p| self.matches[p]).collect(),
        }
    }
}

/// Nearest grid level for a raw weight in `[0, 1]`; exact halves round up.
pub fn quantize_unit(raw: f64, bits: u32) -> u32 {
    let max = ((1u32 << bits) - 1) as f64;
    let g = (raw * max + 0.5).floor();
    (g as u32).min((1u32 << bits) - 1)
}

/// Quantize raw weights onto `2^bits` grid levels and attach the signs
/// induced by the query label.
pub fn discretize(ds: &SortedDataset, raw: &[f64], bits: u32) -> Result<DiscreteWeights> {
    if !(1..=16).contains(&bits) {
        return Err(Error::BadBits(bits));
    }
    assert_eq!(raw.len(), ds.len(), "one raw weight per point");
    for (j, &v) in raw.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::WeightOutOfRange { index: j, value: v });
        }
    }
    let units: Vec<u32> = raw.iter().map(|&v| quantize_unit(v, bits)).collect();
    let matches: Vec<bool> = (0..ds.len()).map(|p| ds.matches_query(p)).collect();
    Ok(DiscreteWeights {
        bits,
        raw: raw.to_vec(),
        units,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, label: u32, idx: usize) -> LabeledPoint {
        LabeledPoint::new(vec![x], label, idx)
    }

    fn query_at(x: f64, label: u32) -> ValQuery {
        ValQuery::new(vec![x], label)
    }

    #[test]
    fn sorts_by_distance() {
        let points = vec![pt(3.0, 0, 0), pt(1.0, 1, 1), pt(2.0, 0, 2)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        assert_eq!(ds.distances(), &[1.0, 2.0, 3.0]);
        assert_eq!(
            ds.points().iter().map(|p| p.orig_index).collect::<Vec<_>>(),
            vec![1, 2, 0]
        );
    }

    #[test]
    fn equidistant_points_keep_input_order() {
        let points = vec![pt(-1.0, 0, 0), pt(1.0, 1, 1)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        assert_eq!(ds.orig_index(0), 0);
        assert_eq!(ds.orig_index(1), 1);
    }

    #[test]
    fn rejects_dimension_mismatch_and_non_finite() {
        let bad_dim = vec![LabeledPoint::new(vec![1.0, 2.0], 0, 0)];
        assert!(matches!(
            sort_by_distance(bad_dim, query_at(0.0, 0), Metric::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad_val = vec![pt(f64::NAN, 0, 0)];
        assert!(matches!(
            sort_by_distance(bad_val, query_at(0.0, 0), Metric::Euclidean),
            Err(Error::NonFiniteFeature { .. })
        ));
    }

    #[test]
    fn uniform_weights_are_one() {
        let points = vec![pt(1.0, 0, 0), pt(2.0, 1, 1)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let w = assign_weights(&ds, Kernel::Uniform);
        assert_eq!(w.raw, vec![1.0, 1.0]);
        assert!(!w.uniform_fallback);
    }

    #[test]
    fn norm_dist_matches_closed_form() {
        let points = vec![pt(1.0, 0, 0), pt(2.0, 1, 1), pt(3.0, 0, 2)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let w = assign_weights(&ds, Kernel::NormDist);
        assert_eq!(w.raw, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn norm_dist_all_equal_falls_back_to_uniform() {
        let points = vec![pt(1.0, 0, 0), pt(-1.0, 1, 1)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let w = assign_weights(&ds, Kernel::NormDist);
        assert_eq!(w.raw, vec![1.0, 1.0]);
        assert!(w.uniform_fallback);
    }

    #[test]
    fn rbf_at_zero_distance_is_one() {
        let points = vec![pt(0.0, 0, 0)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let w = assign_weights(&ds, Kernel::Rbf);
        assert_eq!(w.raw, vec![1.0]);
    }

    #[test]
    fn quantize_endpoints_and_ties() {
        // Endpoints are grid points at any width.
        for bits in 1..=8 {
            assert_eq!(quantize_unit(0.0, bits), 0);
            assert_eq!(quantize_unit(1.0, bits), (1 << bits) - 1);
        }
        // b = 3 has 8 levels; 0.5 sits exactly between 3/7 and 4/7 and must
        // round up.
        assert_eq!(quantize_unit(0.5, 3), 4);
    }

    #[test]
    fn discretize_builds_signed_units() {
        let points = vec![pt(1.0, 0, 0), pt(2.0, 1, 1)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let w = discretize(&ds, &[1.0, 0.5], 3).unwrap();
        assert_eq!(w.levels(), 8);
        assert_eq!(w.unit(0), 7);
        assert_eq!(w.unit(1), 4);
        assert_eq!(w.signed_unit(0), 7);
        assert_eq!(w.signed_unit(1), -4);
        assert!((w.quantized(1) - 4.0 / 7.0).abs() < 1e-15);
        assert!((w.signed(1) + 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn discretize_rejects_out_of_range() {
        let points = vec![pt(1.0, 0, 0)];
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        assert!(matches!(
            discretize(&ds, &[1.5], 3),
            Err(Error::WeightOutOfRange { .. })
        ));
        assert!(matches!(discretize(&ds, &[0.5], 0), Err(Error::BadBits(0))));
    }

    #[test]
    fn discretize_is_idempotent() {
        let points: Vec<LabeledPoint> = (0..9).map(|j| pt(j as f64, 0, j)).collect();
        let ds = sort_by_distance(points, query_at(0.0, 0), Metric::Euclidean).unwrap();
        let raw: Vec<f64> = (0..9).map(|j| 1.0 - j as f64 / 8.0).collect();
        for bits in 1..=6 {
            let w1 = discretize(&ds, &raw, bits).unwrap();
            let w2 = discretize(&ds, &w1.quantized_vec(), bits).unwrap();
            assert_eq!(w1.units, w2.units, "bits {bits}");
        }
    }
}

//! Shared fixtures for unit tests.

use crate::dataset::{discretize, sort_by_distance, DiscreteWeights, LabeledPoint, Metric,
    SortedDataset, ValQuery};

/// Points on a line at distances 1, 2, 3, ... from the query, with the given
/// labels and raw weights (already in sorted order).
pub(crate) fn line_instance(
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

//! Closed-form attribution for unweighted soft-label KNN, used as a
//! comparison baseline. The farthest point gets a closed form; every other
//! point follows from its successor by a two-term difference, so the whole
//! vector costs no more than the sort that produced it.

use crate::dataset::SortedDataset;
use crate::error::{Error, Result};
use crate::oracle::Subset;

/// Baseline scores under the soft-label utility, indexed by original index.
#[derive(Debug, Clone)]
pub struct UnweightedScores {
    pub values: Vec<f64>,
    pub num_classes: u32,
}

/// Soft-label utility: the fraction of the `min(K, |S|)` nearest members of
/// `S` that carry the query label; `1/C` on the empty subset.
pub fn utility_soft_unweighted(s: Subset, ds: &SortedDataset, k: usize, num_classes: u32) -> f64 {
    if s.is_empty() {
        return 1.0 / num_classes as f64;
    }
    let take = s.len().min(k);
    let matching = s
        .members()
        .take(take)
        .filter(|&pos| ds.matches_query(pos))
        .count();
    matching as f64 / take as f64
}

/// Closed-form recursion for the soft-label scores.
pub fn unweighted_knn_shapley(
    ds: &SortedDataset,
    k: usize,
    num_classes: u32,
) -> Result<UnweightedScores> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    if num_classes < 2 {
        return Err(Error::NeedTwoClasses(num_classes));
    }
    let n = ds.len();
    let mut per_pos = vec![0.0; n];
    if n == 0 {
        return Ok(UnweightedScores {
            values: per_pos,
            num_classes,
        });
    }

    let a = |pos: usize| -> f64 { f64::from(ds.matches_query(pos)) };
    let c = num_classes as f64;
    let nf = n as f64;

    // Farthest point.
    let mut tail_harmonic = 0.0;
    for j in 1..k.min(n) {
        tail_harmonic += 1.0 / (j + 1) as f64;
    }
    let mut phi = (1.0 / nf) * (a(n - 1) - 1.0 / c);
    if n >= 2 {
        let closer_matches: f64 = (0..n - 1).map(a).sum();
        phi += (1.0 / nf) * (a(n - 1) - closer_matches / (n as f64 - 1.0)) * tail_harmonic;
    }
    per_pos[n - 1] = phi;

    // Walk towards the query. The neighborhood can never exceed the dataset,
    // so K is capped at N; with fewer points than K the cap is what keeps
    // the difference bracket consistent with direct enumeration.
    let k_eff = k.min(n);
    let mut harmonic_k = 0.0;
    for j in 1..=k_eff {
        harmonic_k += 1.0 / j as f64;
    }
    for pos in (0..n.saturating_sub(1)).rev() {
        let rank = (pos + 1) as f64;
        let bracket = harmonic_k
            + (rank.min(k_eff as f64) * (nf - 1.0) / rank - k_eff as f64) / k_eff as f64;
        per_pos[pos] =
            per_pos[pos + 1] + (a(pos) - a(pos + 1)) / (nf - 1.0) * bracket;
    }

    let mut values = vec![0.0; ds.score_len()];
    for (pos, &v) in per_pos.iter().enumerate() {
        values[ds.orig_index(pos)] = v;
    }
    Ok(UnweightedScores {
        values,
        num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::line_instance;
    use crate::oracle::enumerate_shapley;

    #[test]
    fn soft_utility_edges() {
        let (ds, _) = line_instance(&[0, 0, 1, 0, 0], &[1.0; 5], 0, 1);
        assert_eq!(utility_soft_unweighted(Subset::EMPTY, &ds, 3, 2), 0.5);
        let all_match = Subset::from_positions(&[0, 1, 3], 5).unwrap();
        assert_eq!(utility_soft_unweighted(all_match, &ds, 3, 2), 1.0);
        // |S| = 2 < K = 5 with one match: denominator is |S|.
        let two = Subset::from_positions(&[0, 2], 5).unwrap();
        assert_eq!(utility_soft_unweighted(two, &ds, 5, 2), 0.5);
    }

    #[test]
    fn single_point_closed_form() {
        let (ds, _) = line_instance(&[0], &[1.0], 0, 1);
        let scores = unweighted_knn_shapley(&ds, 3, 2).unwrap();
        assert!((scores.values[0] - 0.5).abs() < 1e-15);
        let (ds, _) = line_instance(&[1], &[1.0], 0, 1);
        let scores = unweighted_knn_shapley(&ds, 3, 2).unwrap();
        assert!((scores.values[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn equal_adjacent_labels_share_a_value() {
        let (ds, _) = line_instance(&[0, 0, 1, 1, 0, 0], &[1.0; 6], 0, 1);
        let scores = unweighted_knn_shapley(&ds, 2, 2).unwrap();
        assert_eq!(scores.values[0], scores.values[1]);
        assert_eq!(scores.values[2], scores.values[3]);
        assert_eq!(scores.values[4], scores.values[5]);
    }

    #[test]
    fn recursion_matches_enumeration() {
        let cases: &[(&[u32], u32, usize)] = &[
            (&[0, 1, 0, 0, 1, 0, 1, 1], 2, 3),
            (&[2, 0, 1, 1, 0, 2, 0], 3, 2),
            (&[0, 1, 1, 0, 0], 2, 5),
            (&[1, 0], 2, 1),
        ];
        for &(labels, classes, k) in cases {
            let raw = vec![1.0; labels.len()];
            let (ds, _) = line_instance(labels, &raw, 0, 1);
            let fast = unweighted_knn_shapley(&ds, k, classes).unwrap();
            let slow =
                enumerate_shapley(labels.len(), |s| utility_soft_unweighted(s, &ds, k, classes))
                    .unwrap();
            for (pos, &v) in slow.iter().enumerate() {
                let orig = ds.orig_index(pos);
                assert!(
                    (fast.values[orig] - v).abs() < 1e-12,
                    "labels {labels:?} k {k} C {classes} pos {pos}: {} vs {v}",
                    fast.values[orig]
                );
            }
        }
    }
}

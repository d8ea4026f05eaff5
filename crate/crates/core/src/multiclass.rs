//! Multi-class scoring by reduction to per-class binary subproblems.
//!
//! For each class `c` other than the query label, the dataset is restricted
//! to points labeled either `c` or the query label, the binary engine scores
//! the restriction, and points outside it get zero. The final value is the
//! average over the `C-1` class pairs; with two classes this is exactly the
//! binary engine's output.

use crate::approx::{approx_shapley, min_mstar, ApproxConfig, MstarPolicy};
use crate::dataset::{DiscreteWeights, SortedDataset};
use crate::error::{Error, Result};
use crate::exact::truncated_position_values;
use crate::oracle::{OracleConfig, Subset};
use crate::scores::{ScoreMethod, ShapleyScores};

/// The order-preserving restriction of a dataset to one class pair.
#[derive(Debug, Clone)]
pub struct ClassPairSubset {
    /// The non-query class of the pair.
    pub class: u32,
    /// Sorted positions of the full dataset retained in the restriction.
    pub positions: Vec<usize>,
    pub dataset: SortedDataset,
    pub weights: DiscreteWeights,
}

/// Restrict to points labeled either `c` or the query label. Weights carry
/// over unchanged; relative distance order is preserved.
pub fn build_class_pair(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    c: u32,
) -> Result<ClassPairSubset> {
    let query_label = ds.query().label;
    if c == query_label {
        return Err(Error::ClassIsQueryLabel(c));
    }
    let positions: Vec<usize> = (0..ds.len())
        .filter(|&p| ds.label(p) == c || ds.label(p) == query_label)
        .collect();
    Ok(ClassPairSubset {
        class: c,
        dataset: ds.restrict(&positions),
        weights: w.restrict(&positions),
        positions,
    })
}

/// Which engine solves each class pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    Exact,
    Approx(ApproxConfig),
}

/// Average of the pair indicators: each compares the query-label weight sum
/// against class `c`'s over the K nearest members of the pair restriction.
/// This is the utility whose attribution the reduction computes; with two
/// classes it equals the plain binary utility.
pub fn utility_vtilde(
    s: Subset,
    ds: &SortedDataset,
    w: &DiscreteWeights,
    cfg: &OracleConfig,
) -> f64 {
    let query_label = ds.query().label;
    let mut total = 0u32;
    for c in 0..cfg.num_classes {
        if c == query_label {
            continue;
        }
        let mut sum: i64 = 0;
        let mut taken = 0usize;
        for pos in s.members() {
            let label = ds.label(pos);
            if label == query_label {
                sum += w.unit(pos) as i64;
            } else if label == c {
                sum -= w.unit(pos) as i64;
            } else {
                continue;
            }
            taken += 1;
            if taken == cfg.k {
                break;
            }
        }
        total += u32::from(sum >= 0);
    }
    total as f64 / (cfg.num_classes - 1) as f64
}

/// Scores under the averaged pair utility. `method` picks the binary engine
/// for every pair; truncation policies resolve against each pair's own size.
pub fn multiclass_shapley(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    k: usize,
    num_classes: u32,
    method: SolveMethod,
) -> Result<ShapleyScores> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    if num_classes < 2 {
        return Err(Error::NeedTwoClasses(num_classes));
    }
    for p in ds.points() {
        if p.label >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: p.label,
                classes: num_classes,
            });
        }
    }
    let query_label = ds.query().label;
    if query_label >= num_classes {
        return Err(Error::LabelOutOfRange {
            label: query_label,
            classes: num_classes,
        });
    }

    let out_len = ds.score_len();
    let mut sums = vec![0.0; out_len];
    let mut eps_sum = 0.0;
    let mut approx_used = false;

    for c in 0..num_classes {
        if c == query_label {
            continue;
        }
        let pair = build_class_pair(ds, w, c)?;
        let n_pair = pair.dataset.len();
        if n_pair == 0 {
            continue;
        }
        match method {
            SolveMethod::Exact => {
                let per_pos = truncated_position_values(&pair.weights, k, n_pair)?;
                for (j, &v) in per_pos.iter().enumerate() {
                    sums[pair.dataset.orig_index(j)] += v;
                }
            }
            SolveMethod::Approx(cfg) => {
                approx_used = true;
                let pair_cfg = clamp_policy(cfg, n_pair, k);
                let scored = approx_shapley(&pair.dataset, &pair.weights, k, pair_cfg)?;
                for (j, _) in pair.positions.iter().enumerate() {
                    let orig = pair.dataset.orig_index(j);
                    sums[orig] += scored.values[orig];
                }
                eps_sum += scored.eps;
            }
        }
    }

    let denom = (num_classes - 1) as f64;
    let values: Vec<f64> = sums.iter().map(|&v| v / denom).collect();

    if !approx_used {
        return Ok(ShapleyScores::exact_valued(ScoreMethod::Exact, values));
    }

    let eps = eps_sum / denom;
    let mut matches = vec![true; out_len];
    for p in 0..ds.len() {
        matches[ds.orig_index(p)] = ds.matches_query(p);
    }
    let intervals = values
        .iter()
        .zip(&matches)
        .map(|(&v, &m)| if m { (v, v + eps) } else { (v - eps, v) })
        .collect();
    Ok(ShapleyScores {
        method: ScoreMethod::Approx,
        values,
        intervals: Some(intervals),
        eps: Some(eps),
    })
}

/// Fit a truncation policy to a pair's size: fixed ranks clamp into the
/// pair's valid range, other policies already resolve per size.
fn clamp_policy(cfg: ApproxConfig, n_pair: usize, k: usize) -> ApproxConfig {
    match cfg.policy {
        MstarPolicy::Fixed(m) => ApproxConfig::fixed(m.clamp(min_mstar(n_pair, k), n_pair)),
        other => ApproxConfig { policy: other },
    }
}

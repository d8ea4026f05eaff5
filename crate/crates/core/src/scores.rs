//! Score containers and validation-set aggregation.

use crate::dataset::SortedDataset;
use crate::error::{Error, Result};

/// How a score vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMethod {
    Exact,
    Approx,
    BruteForce,
    MonteCarlo,
    UnweightedSoft,
    UnweightedHard,
}

impl ScoreMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreMethod::Exact => "exact",
            ScoreMethod::Approx => "approx",
            ScoreMethod::BruteForce => "oracle",
            ScoreMethod::MonteCarlo => "mc",
            ScoreMethod::UnweightedSoft => "unweighted_soft",
            ScoreMethod::UnweightedHard => "unweighted_hard",
        }
    }
}

/// Per-point values indexed by original index, with optional certified
/// intervals for deterministic approximations.
#[derive(Debug, Clone)]
pub struct ShapleyScores {
    pub method: ScoreMethod,
    pub values: Vec<f64>,
    /// Per-point `(lower, upper)` containing the exact value, when known.
    pub intervals: Option<Vec<(f64, f64)>>,
    /// Worst-case gap to the exact value, when known.
    pub eps: Option<f64>,
}

impl ShapleyScores {
    pub fn exact_valued(method: ScoreMethod, values: Vec<f64>) -> Self {
        Self {
            method,
            values,
            intervals: None,
            eps: None,
        }
    }

    /// Scatter per-sorted-position values onto original indices.
    pub fn from_positions(ds: &SortedDataset, method: ScoreMethod, per_pos: &[f64]) -> Self {
        let mut values = vec![0.0; ds.score_len()];
        for (pos, &v) in per_pos.iter().enumerate() {
            values[ds.orig_index(pos)] = v;
        }
        Self::exact_valued(method, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sum per-query scores into scores for the whole validation set. Linearity
/// of the attribution makes the sum the score of the summed utility, and
/// interval endpoints and error bounds add the same way.
pub fn aggregate_over_validation(per_query: &[ShapleyScores]) -> Result<ShapleyScores> {
    let first = per_query
        .first()
        .ok_or_else(|| Error::Data("no per-query scores to aggregate".into()))?;
    let n = first.values.len();
    if per_query.iter().any(|s| s.values.len() != n) {
        return Err(Error::MismatchedIndexSets);
    }

    let mut values = vec![0.0; n];
    for s in per_query {
        for (acc, v) in values.iter_mut().zip(&s.values) {
            *acc += v;
        }
    }

    let all_intervals = per_query.iter().all(|s| s.intervals.is_some());
    let intervals = if all_intervals {
        let mut acc = vec![(0.0, 0.0); n];
        for s in per_query {
            for (a, iv) in acc.iter_mut().zip(s.intervals.as_ref().unwrap()) {
                a.0 += iv.0;
                a.1 += iv.1;
            }
        }
        Some(acc)
    } else {
        None
    };
    let eps = if per_query.iter().all(|s| s.eps.is_some()) {
        Some(per_query.iter().map(|s| s.eps.unwrap()).sum())
    } else {
        None
    };

    Ok(ShapleyScores {
        method: first.method,
        values,
        intervals,
        eps,
    })
}

//! Deterministic truncated approximation with a certified error interval.
//!
//! Truncating the per-target scan after the `M*` nearest positions leaves a
//! value with the same label sign and no larger magnitude than the exact one,
//! off by at most a closed-form `eps(M*)` that depends only on `N`, `K`, and
//! `M*`. The exact value therefore always lies in `[v, v + eps]` for
//! query-matching points and `[v - eps, v]` otherwise.

use crate::combinatorics::{binom_f64, KahanSum};
use crate::dataset::{DiscreteWeights, SortedDataset};
use crate::error::{Error, Result};
use crate::exact::{advance_one, assemble, ensure_binary, truncated_position_values, PointCtx, PointScan};
use crate::grid::SignedGrid;
use crate::scores::{ScoreMethod, ShapleyScores};
use rayon::prelude::*;

/// How to pick the truncation rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MstarPolicy {
    Fixed(usize),
    /// `max(K+1, ceil(sqrt(N)))`, clamped to `N`.
    SqrtN,
    /// Grow `M*` until `eps(M*) < ratio * median(|value|)` over the nonzero
    /// values.
    Adaptive { ratio: f64 },
}

pub const DEFAULT_ADAPTIVE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxConfig {
    pub policy: MstarPolicy,
}

impl ApproxConfig {
    pub fn fixed(mstar: usize) -> Self {
        Self {
            policy: MstarPolicy::Fixed(mstar),
        }
    }

    pub fn sqrt_n() -> Self {
        Self {
            policy: MstarPolicy::SqrtN,
        }
    }

    pub fn adaptive(ratio: f64) -> Self {
        Self {
            policy: MstarPolicy::Adaptive { ratio },
        }
    }
}

/// Smallest admissible truncation rank: `K+1`, or `N` when the dataset is
/// smaller than that (truncation is then a no-op).
pub fn min_mstar(n: usize, k: usize) -> usize {
    (k + 1).min(n)
}

/// Resolve a non-adaptive policy against a dataset size.
pub(crate) fn resolve_mstar(policy: MstarPolicy, n: usize, k: usize) -> Result<usize> {
    match policy {
        MstarPolicy::Fixed(m) => {
            let lo = min_mstar(n, k);
            if m < lo || m > n {
                Err(Error::MstarOutOfRange {
                    mstar: m,
                    lo,
                    hi: n,
                })
            } else {
                Ok(m)
            }
        }
        MstarPolicy::SqrtN => Ok(((n as f64).sqrt().ceil() as usize)
            .max(k + 1)
            .min(n)),
        MstarPolicy::Adaptive { .. } => unreachable!("adaptive policy resolves by iteration"),
    }
}

/// Worst-case gap between the truncated and exact value at rank `mstar`.
/// Strictly decreasing in `mstar`; exactly zero at `mstar = N`.
pub fn error_bound(n: usize, k: usize, mstar: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    let lo = min_mstar(n, k);
    if mstar < lo || mstar > n {
        return Err(Error::MstarOutOfRange {
            mstar,
            lo,
            hi: n,
        });
    }
    let mut tail = KahanSum::new();
    for m in mstar + 1..=n {
        tail.add(1.0 / (m - k) as f64 - 1.0 / m as f64);
    }
    let mut head = KahanSum::new();
    let top = (k - 1).min(n.saturating_sub(1));
    for level in 1..=top {
        let l = level as u64;
        head.add(
            (binom_f64(n as u64, l) - binom_f64(mstar as u64, l))
                / (n as f64 * binom_f64((n - 1) as u64, l)),
        );
    }
    Ok(tail.value() + head.value())
}

/// Truncated values with their certified interval.
#[derive(Debug, Clone)]
pub struct ApproxScores {
    /// Values indexed by original index.
    pub values: Vec<f64>,
    /// Worst-case gap at the rank used.
    pub eps: f64,
    /// Per-point interval containing the exact value.
    pub intervals: Vec<(f64, f64)>,
    pub mstar_used: usize,
    /// Adaptive run reached `M* = N` without the stopping rule firing; the
    /// values are exact.
    pub exhausted: bool,
}

impl ApproxScores {
    pub fn into_scores(self) -> ShapleyScores {
        ShapleyScores {
            method: ScoreMethod::Approx,
            values: self.values,
            intervals: Some(self.intervals),
            eps: Some(self.eps),
        }
    }
}

fn package(
    ds: &SortedDataset,
    per_pos: &[f64],
    eps: f64,
    mstar_used: usize,
    exhausted: bool,
) -> ApproxScores {
    let len = ds.score_len();
    let mut values = vec![0.0; len];
    let mut matches = vec![true; len];
    for (pos, &v) in per_pos.iter().enumerate() {
        values[ds.orig_index(pos)] = v;
        matches[ds.orig_index(pos)] = ds.matches_query(pos);
    }
    let intervals = values
        .iter()
        .zip(&matches)
        .map(|(&v, &m)| if m { (v, v + eps) } else { (v - eps, v) })
        .collect();
    ApproxScores {
        values,
        eps,
        intervals,
        mstar_used,
        exhausted,
    }
}

/// Smallest rank at least `mstar` that does not split a distance tie: any
/// point tied with the last included one is pulled in with it. A cutoff
/// through a tie group would otherwise break the symmetry axiom for twins
/// straddling it; extending only adds counts, so every bound at the
/// requested rank still holds and the reported bound tightens.
pub(crate) fn extend_over_ties(distances: &[f64], mstar: usize) -> usize {
    let mut eff = mstar;
    while eff < distances.len() && distances[eff] == distances[eff - 1] {
        eff += 1;
    }
    eff
}

/// Truncated values under the given policy. Adaptive policies route to
/// [`adaptive_mstar`].
pub fn approx_shapley(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    k: usize,
    cfg: ApproxConfig,
) -> Result<ApproxScores> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    ensure_binary(ds)?;
    assert_eq!(w.len(), ds.len(), "one weight per point");
    if let MstarPolicy::Adaptive { ratio } = cfg.policy {
        return adaptive_mstar(ds, w, k, ratio);
    }
    let n = ds.len();
    if n == 0 {
        return Ok(package(ds, &[], 0.0, 0, false));
    }
    let mstar = extend_over_ties(ds.distances(), resolve_mstar(cfg.policy, n, k)?);
    let per_pos = truncated_position_values(w, k, mstar)?;
    let eps = error_bound(n, k, mstar)?;
    Ok(package(ds, &per_pos, eps, mstar, false))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Grow `M*` from `K+1`, refining every value incrementally, and stop at the
/// first rank where `eps(M*) < ratio * median(|value|)` over nonzero values.
/// If the rule never fires the result is the exact one, flagged `exhausted`.
pub fn adaptive_mstar(
    ds: &SortedDataset,
    w: &DiscreteWeights,
    k: usize,
    ratio: f64,
) -> Result<ApproxScores> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::BadRatio(ratio));
    }
    ensure_binary(ds)?;
    assert_eq!(w.len(), ds.len(), "one weight per point");
    let n = ds.len();
    if n == 0 {
        return Ok(package(ds, &[], 0.0, 0, true));
    }

    let grid = SignedGrid::new(w.bits(), k);
    // Zero-weight points stay at value zero for every rank; no scan needed.
    let mut scans: Vec<Option<(PointCtx, PointScan)>> = (0..n)
        .map(|pos| {
            (w.unit(pos) > 0)
                .then(|| (PointCtx::new(pos, k, w, &grid), PointScan::new(k, grid.len())))
        })
        .collect();

    let lo = min_mstar(n, k);
    let mut mstar = lo;
    let mut effective = extend_over_ties(ds.distances(), lo);
    advance_all(&mut scans, w, &grid, effective)?;
    let mut fired = false;
    loop {
        let eps = error_bound(n, k, effective)?;
        let mut magnitudes: Vec<f64> = scans
            .iter()
            .filter_map(|s| s.as_ref())
            .map(|(ctx, st)| assemble(st, ctx, n).abs())
            .filter(|&v| v > 0.0)
            .collect();
        magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if !magnitudes.is_empty() && eps < ratio * median(&magnitudes) {
            fired = true;
            break;
        }
        if effective == n {
            break;
        }
        mstar += 1;
        effective = extend_over_ties(ds.distances(), mstar.max(effective));
        advance_all(&mut scans, w, &grid, effective)?;
    }

    let per_pos: Vec<f64> = scans
        .iter()
        .map(|s| s.as_ref().map_or(0.0, |(ctx, st)| assemble(st, ctx, n)))
        .collect();
    let eps = error_bound(n, k, effective)?;
    Ok(package(ds, &per_pos, eps, effective, !fired))
}

fn advance_all(
    scans: &mut [Option<(PointCtx, PointScan)>],
    w: &DiscreteWeights,
    grid: &SignedGrid,
    to_rank: usize,
) -> Result<()> {
    scans
        .par_iter_mut()
        .try_for_each(|slot| -> Result<()> {
            if let Some((ctx, st)) = slot.as_mut() {
                while st.processed() < to_rank {
                    advance_one(st, ctx, w, grid)?;
                }
            }
            Ok(())
        })
}

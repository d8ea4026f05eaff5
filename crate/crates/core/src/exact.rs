//! Quadratic-time exact attribution for binary weighted KNN.
//!
//! For each target the engine sweeps the sorted positions once, keeping a
//! running prefix of subset counts per level. Each position contributes a
//! shifted copy of the previous level's prefix (the next table row), a slice
//! of flip counts, and one shortcut-stream term that collapses all subset
//! sizes `>= K` — so a target costs `O(K N |grid|)` and the whole dataset
//! `O(K^2 W N^2)`. Work per target is independent and runs on the rayon pool.
//!
//! The materialized [`crate::grid::CountTable`] path computes the same
//! quantities; the streaming form just never holds more than the prefixes.

use crate::combinatorics::binom_f64;
use crate::dataset::{DiscreteWeights, SortedDataset};
use crate::error::{Error, Result};
use crate::grid::{
    add_shifted, flip_interval_replace, flip_interval_small, shifted_interval_sum, SignedGrid,
};
use crate::scores::{ScoreMethod, ShapleyScores};
use rayon::prelude::*;
use std::ops::Range;

/// Per-target loop constants.
pub(crate) struct PointCtx {
    position: usize,
    k: usize,
    unit: u32,
    matches: bool,
    g_range: Range<usize>,
    /// First 1-based rank that can replace the K-th neighbor: `max(i+2, K+1)`.
    r_start_rank: usize,
}

impl PointCtx {
    pub(crate) fn new(position: usize, k: usize, w: &DiscreteWeights, grid: &SignedGrid) -> Self {
        let unit = w.unit(position);
        let matches = w.matches_query(position);
        PointCtx {
            position,
            k,
            unit,
            matches,
            g_range: flip_interval_small(grid, unit, matches),
            r_start_rank: (position + 2).max(k + 1),
        }
    }
}

/// Mutable scan state for one target: level prefixes, flip counts, and the
/// running shortcut-stream sum.
pub(crate) struct PointScan {
    prefixes: Vec<Vec<u64>>,
    g_counts: Vec<u128>,
    r_sum: f64,
    processed: usize,
}

impl PointScan {
    pub(crate) fn new(k: usize, grid_len: usize) -> Self {
        PointScan {
            prefixes: vec![vec![0u64; grid_len]; k - 1],
            g_counts: vec![0u128; k],
            r_sum: 0.0,
            processed: 0,
        }
    }

    pub(crate) fn processed(&self) -> usize {
        self.processed
    }
}

/// Fold the next sorted position into the scan.
pub(crate) fn advance_one(
    st: &mut PointScan,
    ctx: &PointCtx,
    w: &DiscreteWeights,
    grid: &SignedGrid,
) -> Result<()> {
    let m = st.processed;
    let k = ctx.k;
    let rank = m + 1;

    // Shortcut term first: it reads the level K-1 prefix over positions
    // strictly closer than m.
    if rank >= ctx.r_start_rank {
        let range = flip_interval_replace(grid, ctx.unit, ctx.matches, w.signed_unit(m));
        let count: u128 = if k == 1 {
            // The only size-0 prefix is empty with sum 0.
            u128::from(!range.is_empty())
        } else {
            shifted_interval_sum(&st.prefixes[k - 2], 0, &range)
        };
        if count > 0 {
            st.r_sum += count as f64 / (rank as f64 * binom_f64((rank - 1) as u64, k as u64));
        }
    }

    if m != ctx.position && k >= 2 {
        let shift = w.signed_unit(m);
        // Higher levels first, so each level reads the prefix below it before
        // this position is folded in.
        for level in (2..k).rev() {
            let (below, at) = st.prefixes.split_at_mut(level - 1);
            let src = &below[level - 2];
            st.g_counts[level] += shifted_interval_sum(src, shift, &ctx.g_range);
            add_shifted(&mut at[0], src, shift)?;
        }
        let idx = grid.index_of(shift);
        if ctx.g_range.contains(&idx) {
            st.g_counts[1] += 1;
        }
        let cell = &mut st.prefixes[0][idx];
        *cell = cell.checked_add(1).ok_or(Error::CountOverflow)?;
    }

    st.processed = m + 1;
    Ok(())
}

/// Combine flip counts and the shortcut sum into the signed value.
pub(crate) fn assemble(st: &PointScan, ctx: &PointCtx, n: usize) -> f64 {
    let sign = if ctx.matches { 1.0 } else { -1.0 };
    let mut small = u128::from(!ctx.matches && ctx.unit > 0) as f64;
    let top = (ctx.k - 1).min(n.saturating_sub(1));
    for (level, &count) in st.g_counts.iter().enumerate().take(top + 1).skip(1) {
        small += count as f64 / binom_f64((n - 1) as u64, level as u64);
    }
    sign * (small / n as f64 + st.r_sum)
}

/// Value for one target with the scan truncated after `mstar` positions.
/// `mstar = n` is the exact value.
pub(crate) fn scan_value(
    w: &DiscreteWeights,
    k: usize,
    mstar: usize,
    position: usize,
) -> Result<f64> {
    if w.unit(position) == 0 {
        // Zero quantized weight can never flip a vote.
        return Ok(0.0);
    }
    let grid = SignedGrid::new(w.bits(), k);
    let ctx = PointCtx::new(position, k, w, &grid);
    let mut st = PointScan::new(k, grid.len());
    for _ in 0..mstar {
        advance_one(&mut st, &ctx, w, &grid)?;
    }
    Ok(assemble(&st, &ctx, w.len()))
}

/// Truncated values for every sorted position, in parallel over targets.
pub(crate) fn truncated_position_values(
    w: &DiscreteWeights,
    k: usize,
    mstar: usize,
) -> Result<Vec<f64>> {
    debug_assert!(mstar <= w.len());
    (0..w.len())
        .into_par_iter()
        .map(|pos| scan_value(w, k, mstar, pos))
        .collect()
}

pub(crate) fn ensure_binary(ds: &SortedDataset) -> Result<()> {
    let distinct = ds.distinct_labels();
    if distinct > 2 {
        return Err(Error::NotBinary(distinct));
    }
    Ok(())
}

/// Exact per-point values for a binary weighted KNN classifier.
pub fn exact_shapley(ds: &SortedDataset, w: &DiscreteWeights, k: usize) -> Result<ShapleyScores> {
    if k < 1 {
        return Err(Error::BadK(k));
    }
    ensure_binary(ds)?;
    assert_eq!(w.len(), ds.len(), "one weight per point");
    let per_pos = truncated_position_values(w, k, ds.len())?;
    Ok(ShapleyScores::from_positions(
        ds,
        ScoreMethod::Exact,
        &per_pos,
    ))
}

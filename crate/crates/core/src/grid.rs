//! Signed accumulator grid and the per-target subset-count table.
//!
//! Partial sums of up to `K-1` signed quantized weights are integer multiples
//! of `1/(2^b - 1)` in `[-(K-1), K-1]`, so they are indexed by integer grid
//! units throughout; no interval test ever touches a float.
//!
//! `CountTable` materializes, for one target point, the count of subsets of
//! each size whose farthest member and signed prefix sum are prescribed. The
//! production engines stream the same recursion without materializing it;
//! this explicit form backs the public API and the cross-checking tests.

use crate::combinatorics::binom_f64;
use crate::dataset::DiscreteWeights;
use crate::error::{Error, Result};

/// Index space for signed partial sums of up to `K-1` quantized weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedGrid {
    bits: u32,
    k: usize,
    /// `(K-1) * (2^bits - 1)`: largest reachable magnitude in units.
    span: i64,
}

impl SignedGrid {
    pub fn new(bits: u32, k: usize) -> SignedGrid {
        let max_unit = ((1u32 << bits) - 1) as i64;
        SignedGrid {
            bits,
            k,
            span: (k as i64 - 1).max(0) * max_unit,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Grid resolution in weight space.
    pub fn step(&self) -> f64 {
        1.0 / ((1u32 << self.bits) - 1) as f64
    }

    pub fn lo_units(&self) -> i64 {
        -self.span
    }

    pub fn hi_units(&self) -> i64 {
        self.span
    }

    /// Number of representable sums, `2 (K-1)(2^b - 1) + 1`.
    pub fn len(&self) -> usize {
        (2 * self.span + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bijective unit -> index mapping.
    pub fn index_of(&self, units: i64) -> usize {
        debug_assert!(units.abs() <= self.span, "sum {units} off grid");
        (units + self.span) as usize
    }

    /// Inverse mapping, as a weight-space value.
    pub fn value_at(&self, index: usize) -> f64 {
        (index as i64 - self.span) as f64 * self.step()
    }

    /// Index range for the half-open unit interval `[lo, hi)`, clamped to the
    /// grid; empty when `lo >= hi`.
    pub fn range(&self, lo_units: i64, hi_units: i64) -> std::ops::Range<usize> {
        if lo_units >= hi_units {
            return 0..0;
        }
        let lo = lo_units.clamp(-self.span, self.span + 1);
        let hi = hi_units.clamp(-self.span, self.span + 1);
        if lo >= hi {
            return 0..0;
        }
        (lo + self.span) as usize..(hi + self.span) as usize
    }
}

/// Subset counts for one target point. `entry(m, l, s)` is the number of
/// size-`l` subsets avoiding the target, keeping the target within the K
/// nearest after insertion, whose farthest member is the point at sorted
/// position `m` and whose signed prefix sum sits at grid index `s`. Only
/// levels `l <= K-1` exist; larger subsets are collapsed by the shortcut
/// stream instead.
#[derive(Debug, Clone)]
pub struct CountTable {
    target: usize,
    n: usize,
    k: usize,
    grid: SignedGrid,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &SignedGrid {
        &self.grid
    }

    fn offset(&self, m: usize, level: usize) -> usize {
        debug_assert!(m < self.n);
        debug_assert!((1..self.k).contains(&level));
        (m * (self.k - 1) + (level - 1)) * self.grid.len()
    }

    /// Count at sorted position `m`, subset size `level`, grid index `s`.
    pub fn entry(&self, m: usize, level: usize, s: usize) -> u64 {
        self.counts[self.offset(m, level) + s]
    }

    /// All counts for one `(m, level)` row, indexed by grid position.
    pub fn row(&self, m: usize, level: usize) -> &[u64] {
        let at = self.offset(m, level);
        &self.counts[at..at + self.grid.len()]
    }
}

/// `dst[z] += src[z - shift]` over the valid overlap, with overflow checks.
pub(crate) fn add_shifted(dst: &mut [u64], src: &[u64], shift: i64) -> Result<()> {
    let z = dst.len();
    debug_assert_eq!(src.len(), z);
    let (dst_at, src_at, len) = if shift >= 0 {
        let s = shift as usize;
        if s >= z {
            return Ok(());
        }
        (s, 0, z - s)
    } else {
        let s = (-shift) as usize;
        if s >= z {
            return Ok(());
        }
        (0, s, z - s)
    };
    for (d, s) in dst[dst_at..dst_at + len]
        .iter_mut()
        .zip(&src[src_at..src_at + len])
    {
        *d = d.checked_add(*s).ok_or(Error::CountOverflow)?;
    }
    Ok(())
}

/// Sum of `src[z - shift]` over `z` in `range`.
pub(crate) fn shifted_interval_sum(
    src: &[u64],
    shift: i64,
    range: &std::ops::Range<usize>,
) -> u128 {
    let mut total: u128 = 0;
    for z in range.clone() {
        let from = z as i64 - shift;
        if (0..src.len() as i64).contains(&from) {
            total += src[from as usize] as u128;
        }
    }
    total
}

fn interval_sum(src: &[u64], range: &std::ops::Range<usize>) -> u128 {
    src[range.clone()].iter().map(|&v| v as u128).sum()
}

/// Build the full count table for `target` by the prefix-cached recursion:
/// each `(m, level)` row is a shifted copy of the running prefix of the
/// previous level over positions before `m`.
pub fn build_count_table(target: usize, w: &DiscreteWeights, k: usize) -> Result<CountTable> {
    if k < 2 {
        return Err(Error::TableNeedsKAtLeastTwo(k));
    }
    let n = w.len();
    assert!(target < n, "target {target} out of range for {n} points");
    let grid = SignedGrid::new(w.bits(), k);
    let z = grid.len();
    let mut counts = vec![0u64; n * (k - 1) * z];
    // prefixes[level-1][s] = sum of rows 0..m at `level`, target excluded.
    let mut prefixes = vec![vec![0u64; z]; k - 1];

    for m in 0..n {
        if m != target {
            let shift = w.signed_unit(m);
            let base = (m * (k - 1)) * z;
            // Higher levels first so each reads the previous level's prefix
            // before this m is folded in.
            for level in (2..k).rev() {
                let row = &mut counts[base + (level - 1) * z..base + level * z];
                add_shifted(row, &prefixes[level - 2], shift)?;
            }
            let row1 = &mut counts[base..base + z];
            row1[grid.index_of(shift)] = 1;
            for level in 1..k {
                let row = &counts[base + (level - 1) * z..base + level * z];
                for (p, &r) in prefixes[level - 1].iter_mut().zip(row) {
                    *p = p.checked_add(r).ok_or(Error::CountOverflow)?;
                }
            }
        }
    }

    Ok(CountTable {
        target,
        n,
        k,
        grid,
        counts,
    })
}

/// Half-open unit interval selecting the sums whose utility flips when the
/// target joins a small subset (one not yet holding K points).
pub(crate) fn flip_interval_small(
    grid: &SignedGrid,
    target_unit: u32,
    target_matches: bool,
) -> std::ops::Range<usize> {
    let g = target_unit as i64;
    if target_matches {
        grid.range(-g, 0)
    } else {
        grid.range(0, g)
    }
}

/// Unit interval for the shortcut stream at replacement position `m`.
pub(crate) fn flip_interval_replace(
    grid: &SignedGrid,
    target_unit: u32,
    target_matches: bool,
    m_signed_unit: i64,
) -> std::ops::Range<usize> {
    let g = target_unit as i64;
    if target_matches {
        grid.range(-g, -m_signed_unit)
    } else {
        grid.range(-m_signed_unit, g)
    }
}

/// Flip counts `G_0..G_{K-1}` for the table's target: `G_l` is the number of
/// size-`l` subsets whose utility changes when the target is added.
pub fn compute_g(table: &CountTable, w: &DiscreteWeights) -> Result<Vec<u128>> {
    ensure_same_grid(table, w)?;
    let i = table.target();
    let range = flip_interval_small(table.grid(), w.unit(i), w.matches_query(i));
    let mut g = vec![0u128; table.k()];
    g[0] = u128::from(!w.matches_query(i) && w.unit(i) > 0);
    for (level, slot) in g.iter_mut().enumerate().skip(1) {
        let mut total: u128 = 0;
        for m in 0..table.n() {
            if m != i {
                total += interval_sum(table.row(m, level), &range);
            }
        }
        *slot = total;
    }
    Ok(g)
}

/// Shortcut aggregates `R_{i,m}` for `m` ranked `max(i+1, K+1) ..= N`
/// (1-based), computed with a running prefix of the level-`K-1` rows.
/// Returns `(rank, count)` pairs.
pub fn compute_r_stream(table: &CountTable, w: &DiscreteWeights) -> Result<Vec<(usize, u128)>> {
    ensure_same_grid(table, w)?;
    let (i, n, k) = (table.target(), table.n(), table.k());
    let start_rank = (i + 2).max(k + 1);
    if start_rank > n {
        return Ok(Vec::new());
    }

    let z = table.grid().len();
    let mut prefix = vec![0u128; z];
    for m in 0..start_rank - 1 {
        if m != i {
            for (p, &v) in prefix.iter_mut().zip(table.row(m, k - 1)) {
                *p += v as u128;
            }
        }
    }

    let mut out = Vec::with_capacity(n - start_rank + 1);
    for rank in start_rank..=n {
        let m = rank - 1;
        let range =
            flip_interval_replace(table.grid(), w.unit(i), w.matches_query(i), w.signed_unit(m));
        let total: u128 = prefix[range].iter().sum();
        out.push((rank, total));
        if m != i {
            for (p, &v) in prefix.iter_mut().zip(table.row(m, k - 1)) {
                *p += v as u128;
            }
        }
    }
    Ok(out)
}

fn ensure_same_grid(table: &CountTable, w: &DiscreteWeights) -> Result<()> {
    if table.grid().bits() != w.bits() {
        return Err(Error::GridMismatch {
            expected: table.grid().bits(),
            got: w.bits(),
        });
    }
    Ok(())
}

/// Row-sum identity: with `m` positions strictly closer than `m` (0-based),
/// the counts at `(m, level)` total `C(m - [i < m], level - 1)` choices of
/// the remaining members, exactly.
pub fn row_sum_expected(table: &CountTable, m: usize, level: usize) -> u64 {
    let i = table.target();
    if m == i {
        return 0;
    }
    let closer = m - usize::from(i < m);
    binom_f64(closer as u64, (level - 1) as u64) as u64
}

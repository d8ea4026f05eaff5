//! Evaluation harness: corruption generators, AUROC scoring, the end-to-end
//! scoring pipeline, and runtime benchmarking.

use crate::approx::{approx_shapley, ApproxConfig, MstarPolicy};
use crate::dataset::{
    assign_weights, discretize, sort_by_distance, Kernel, LabeledPoint, Metric, ValQuery,
};
use crate::error::{Error, Result};
use crate::exact::exact_shapley;
use crate::multiclass::{multiclass_shapley, utility_vtilde, SolveMethod};
use crate::oracle::{brute_force_shapley, enumerate_shapley, monte_carlo_shapley, OracleConfig};
use crate::scores::{aggregate_over_validation, ScoreMethod, ShapleyScores};
use crate::synthetic;
use crate::unweighted::unweighted_knn_shapley;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashSet;
use std::time::Instant;

/// Flip the labels of exactly `round(rate * N)` points, chosen without
/// replacement; each flip picks uniformly among the other classes.
pub fn flip_labels(
    points: &[LabeledPoint],
    rate: f64,
    num_classes: u32,
    seed: u64,
) -> Result<(Vec<LabeledPoint>, Vec<usize>)> {
    if !(0.0 < rate && rate < 1.0) {
        return Err(Error::BadRate(rate));
    }
    if num_classes < 2 {
        return Err(Error::NeedTwoClasses(num_classes));
    }
    for p in points {
        if p.label >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: p.label,
                classes: num_classes,
            });
        }
    }
    let n = points.len();
    let count = (rate * n as f64 + 0.5).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flipped = rand::seq::index::sample(&mut rng, n, count.min(n)).into_vec();
    flipped.sort_unstable();
    let mut out = points.to_vec();
    for &i in &flipped {
        let offset = rand::Rng::random_range(&mut rng, 1..num_classes);
        out[i].label = (out[i].label + offset) % num_classes;
    }
    Ok((out, flipped))
}

/// Perturb the features of `round(rate * N)` points with zero-mean Gaussian
/// noise whose per-dimension standard deviation is the mean absolute value
/// of that dimension over the full dataset.
pub fn add_feature_noise(
    points: &[LabeledPoint],
    rate: f64,
    seed: u64,
) -> Result<(Vec<LabeledPoint>, Vec<usize>)> {
    if !(0.0 < rate && rate < 1.0) {
        return Err(Error::BadRate(rate));
    }
    let n = points.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let dim = points[0].features.len();
    for p in points {
        if p.features.len() != dim {
            return Err(Error::DimensionMismatch {
                index: p.orig_index,
                expected: dim,
                got: p.features.len(),
            });
        }
    }

    let mut stds = vec![0.0; dim];
    for p in points {
        for (s, &x) in stds.iter_mut().zip(&p.features) {
            *s += x.abs();
        }
    }
    for s in &mut stds {
        *s /= n as f64;
    }

    let count = (rate * n as f64 + 0.5).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noised = rand::seq::index::sample(&mut rng, n, count.min(n)).into_vec();
    noised.sort_unstable();
    let mut out = points.to_vec();
    for &i in &noised {
        for (x, &s) in out[i].features.iter_mut().zip(&stds) {
            if s > 0.0 {
                let normal = Normal::new(0.0, s).expect("finite std");
                *x += normal.sample(&mut rng);
            }
        }
    }
    Ok((out, noised))
}

/// Scores are read as corruption signals: lower value, stronger suspicion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LowIsPositive,
}

/// Rank-based AUROC with midrank tie handling.
pub fn auroc(values: &[f64], positives: &[usize], _direction: Direction) -> Result<f64> {
    let n = values.len();
    let set: HashSet<usize> = positives.iter().copied().collect();
    if set.len() != positives.len() || set.is_empty() || set.len() >= n {
        return Err(Error::DegeneratePositives);
    }
    if let Some(&bad) = positives.iter().find(|&&p| p >= n) {
        return Err(Error::BadSubsetIndex(bad));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite scores"));
    let mut rank = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &at in &order[i..=j] {
            rank[at] = mid;
        }
        i = j + 1;
    }

    let np = set.len();
    let nn = n - np;
    let mut rank_sum = 0.0;
    for (p, r) in rank.iter().enumerate() {
        if set.contains(&p) {
            rank_sum += r;
        }
    }
    // Pairs where the positive ranks above a negative (ties half-counted);
    // low scores flag corruption, so invert.
    let u = rank_sum - (np * (np + 1) / 2) as f64;
    Ok(1.0 - u / (np as f64 * nn as f64))
}

/// Scoring method for a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Approx(MstarPolicy),
    MonteCarlo { epsilon: f64, delta: f64 },
    Oracle,
    UnweightedSoft,
    UnweightedHard,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx(_) => "approx",
            Method::MonteCarlo { .. } => "mc",
            Method::Oracle => "oracle",
            Method::UnweightedSoft => "unweighted_soft",
            Method::UnweightedHard => "unweighted_hard",
        }
    }
}

/// One pipeline configuration: method, KNN and grid parameters, kernel,
/// seed, and the worker count the caller sizes its thread pool with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub k: usize,
    pub bits: u32,
    pub kernel: Kernel,
    pub seed: u64,
    pub workers: usize,
}

/// Aggregated scores for a training set against a validation set, with
/// per-query wall times.
#[derive(Debug, Clone)]
pub struct ScoredRun {
    pub scores: ShapleyScores,
    pub query_seconds: Vec<f64>,
    pub num_classes: u32,
    /// Largest truncation rank used, for fixed-rank and sqrt approximations
    /// on binary data.
    pub mstar_used: Option<usize>,
    /// A norm-dist kernel fell back to uniform on some query.
    pub uniform_fallback: bool,
}

fn infer_num_classes(points: &[LabeledPoint], queries: &[ValQuery]) -> u32 {
    let mut max_label = 0;
    for p in points {
        max_label = max_label.max(p.label);
    }
    for q in queries {
        max_label = max_label.max(q.label);
    }
    (max_label + 1).max(2)
}

/// Score every training point against every validation query and sum the
/// per-query scores.
pub fn score_run(
    points: &[LabeledPoint],
    queries: &[ValQuery],
    cfg: &RunConfig,
) -> Result<ScoredRun> {
    if points.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if queries.is_empty() {
        return Err(Error::Data("validation set is empty".into()));
    }
    let num_classes = infer_num_classes(points, queries);
    let kernel = match cfg.method {
        Method::UnweightedHard => Kernel::Uniform,
        _ => cfg.kernel,
    };

    let mut per_query = Vec::with_capacity(queries.len());
    let mut query_seconds = Vec::with_capacity(queries.len());
    let mut mstar_used: Option<usize> = None;
    let mut uniform_fallback = false;

    for (qi, query) in queries.iter().enumerate() {
        let started = Instant::now();
        let ds = sort_by_distance(points.to_vec(), query.clone(), Metric::Euclidean)?;
        let assigned = assign_weights(&ds, kernel);
        uniform_fallback |= assigned.uniform_fallback;
        let w = discretize(&ds, &assigned.raw, cfg.bits)?;

        let scores = match cfg.method {
            Method::Exact | Method::UnweightedHard => {
                if num_classes <= 2 {
                    exact_shapley(&ds, &w, cfg.k)?
                } else {
                    multiclass_shapley(&ds, &w, cfg.k, num_classes, SolveMethod::Exact)?
                }
            }
            Method::Approx(policy) => {
                let approx_cfg = ApproxConfig { policy };
                if num_classes <= 2 {
                    let scored = approx_shapley(&ds, &w, cfg.k, approx_cfg)?;
                    mstar_used = Some(mstar_used.map_or(scored.mstar_used, |m: usize| {
                        m.max(scored.mstar_used)
                    }));
                    scored.into_scores()
                } else {
                    multiclass_shapley(&ds, &w, cfg.k, num_classes, SolveMethod::Approx(approx_cfg))?
                }
            }
            Method::MonteCarlo { epsilon, delta } => {
                let ocfg = OracleConfig::new(cfg.k, num_classes)?;
                monte_carlo_shapley(&ds, &w, &ocfg, epsilon, delta, cfg.seed.wrapping_add(qi as u64))?
            }
            Method::Oracle => {
                let ocfg = OracleConfig::new(cfg.k, num_classes)?;
                if num_classes <= 2 {
                    brute_force_shapley(&ds, &w, &ocfg)?
                } else {
                    let per_pos =
                        enumerate_shapley(ds.len(), |s| utility_vtilde(s, &ds, &w, &ocfg))?;
                    ShapleyScores::from_positions(&ds, ScoreMethod::BruteForce, &per_pos)
                }
            }
            Method::UnweightedSoft => {
                let scored = unweighted_knn_shapley(&ds, cfg.k, num_classes)?;
                ShapleyScores::exact_valued(ScoreMethod::UnweightedSoft, scored.values)
            }
        };
        query_seconds.push(started.elapsed().as_secs_f64());
        per_query.push(scores);
    }

    let scores = aggregate_over_validation(&per_query)?;
    Ok(ScoredRun {
        scores,
        query_seconds,
        num_classes,
        mstar_used,
        uniform_fallback,
    })
}

/// One evaluation record, serialized as flat `key=value` lines.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: String,
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub bits: u32,
    pub kernel: String,
    pub mstar: Option<usize>,
    pub seed: u64,
    pub auroc: Option<f64>,
    pub query_seconds: Vec<f64>,
}

impl EvalReport {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("method={}\n", self.method));
        out.push_str(&format!("dataset={}\n", self.dataset));
        out.push_str(&format!("n={}\n", self.n));
        out.push_str(&format!("k={}\n", self.k));
        out.push_str(&format!("bits={}\n", self.bits));
        out.push_str(&format!("kernel={}\n", self.kernel));
        match self.mstar {
            Some(m) => out.push_str(&format!("mstar={m}\n")),
            None => out.push_str("mstar=none\n"),
        }
        out.push_str(&format!("seed={}\n", self.seed));
        match self.auroc {
            Some(a) => out.push_str(&format!("auroc={a}\n")),
            None => out.push_str("auroc=none\n"),
        }
        let times: Vec<String> = self.query_seconds.iter().map(|t| format!("{t:.6}")).collect();
        out.push_str(&format!("query_seconds={}\n", times.join(",")));
        let total: f64 = self.query_seconds.iter().sum();
        out.push_str(&format!("total_seconds={total:.6}\n"));
        out
    }
}

/// Benchmark reports per size plus the fitted log-log slope of total time
/// against dataset size.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub reports: Vec<EvalReport>,
    pub slope: f64,
}

/// Ordinary least squares slope of `y` on `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Time the configured method on sign-labeled Gaussian data of each size
/// (one validation query per size) and fit the scaling exponent. Each size
/// is run five times after a warmup pass; the recorded time is the fastest
/// run, which keeps scheduler noise at sub-millisecond sizes from skewing
/// the fit.
pub fn bench_runtime(sizes: &[usize], cfg: &RunConfig) -> Result<BenchResult> {
    if sizes.len() < 3 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadBenchSizes);
    }
    let mut reports = Vec::with_capacity(sizes.len());
    let mut log_n = Vec::with_capacity(sizes.len());
    let mut log_t = Vec::with_capacity(sizes.len());
    for (idx, &n) in sizes.iter().enumerate() {
        let points = synthetic::gaussian_sign(n, cfg.seed.wrapping_add(idx as u64));
        let queries = synthetic::gaussian_sign_queries(1, cfg.seed.wrapping_add(0x9e37_79b9));
        score_run(&points, &queries, cfg)?; // warmup
        let mut total = f64::INFINITY;
        let mut run = score_run(&points, &queries, cfg)?;
        total = total.min(run.query_seconds.iter().sum::<f64>());
        for _ in 1..5 {
            run = score_run(&points, &queries, cfg)?;
            total = total.min(run.query_seconds.iter().sum::<f64>());
        }
        log_n.push((n as f64).ln());
        log_t.push(total.max(1e-9).ln());
        run.query_seconds = vec![total];
        reports.push(EvalReport {
            method: cfg.method.name().into(),
            dataset: format!("gaussian-sign-{n}"),
            n,
            k: cfg.k,
            bits: cfg.bits,
            kernel: cfg.kernel.name().into(),
            mstar: run.mstar_used,
            seed: cfg.seed,
            auroc: None,
            query_seconds: run.query_seconds,
        });
    }
    Ok(BenchResult {
        reports,
        slope: least_squares_slope(&log_n, &log_t),
    })
}

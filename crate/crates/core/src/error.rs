use thiserror::Error;

/// Errors produced by dataset construction, the scoring engines, and the
/// evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {index} has {got} features, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("point {index} has a non-finite feature value")]
    NonFiniteFeature { index: usize },
    #[error("point {index} has an empty feature vector")]
    EmptyFeatures { index: usize },
    #[error("original indices must be distinct; {0} appears twice")]
    DuplicateOrigIndex(usize),
    #[error("raw weight {value} at position {index} is outside [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error("discretization bits must be in [1, 16], got {0}")]
    BadBits(u32),
    #[error("K must be at least 1, got {0}")]
    BadK(usize),
    #[error("count table requires K >= 2, got K = {0}")]
    TableNeedsKAtLeastTwo(usize),
    #[error("weight grid does not match: table built for {expected} bits, got {got}")]
    GridMismatch { expected: u32, got: u32 },
    #[error("{n} points exceed the brute-force enumeration limit of {limit}")]
    TooLargeForEnumeration { n: usize, limit: usize },
    #[error("binary scoring requires at most two distinct labels, found {0}")]
    NotBinary(usize),
    #[error("label {label} is outside the configured class range 0..{classes}")]
    LabelOutOfRange { label: u32, classes: u32 },
    #[error("class {0} equals the query label; a class pair needs a distinct class")]
    ClassIsQueryLabel(u32),
    #[error("truncation rank {mstar} is outside the valid range [{lo}, {hi}]")]
    MstarOutOfRange { mstar: usize, lo: usize, hi: usize },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("adaptive ratio must lie in (0, 1), got {0}")]
    BadRatio(f64),
    #[error("corruption rate must lie in (0, 1), got {0}")]
    BadRate(f64),
    #[error("need at least two classes, got {0}")]
    NeedTwoClasses(u32),
    #[error("positive set for AUROC must be non-empty and a proper subset")]
    DegeneratePositives,
    #[error("benchmark sizes must be strictly increasing with at least 3 entries")]
    BadBenchSizes,
    #[error("subset index {0} is invalid for this dataset")]
    BadSubsetIndex(usize),
    #[error("per-query scores cover different index sets")]
    MismatchedIndexSets,
    #[error("subset count overflow; reduce N, K, or the discretization bits")]
    CountOverflow,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

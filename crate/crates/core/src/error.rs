use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval {level}:{index}")]
    InvalidInterval { level: u32, index: u64 },
    #[error("cannot parse interval {0:?}, expected \"k:i\"")]
    ParseInterval(String),
    #[error("invalid depth: {0}")]
    InvalidDepth(String),
    #[error("operation requires a non-empty collection")]
    EmptyCollection,
    #[error("map is not injective: {0} and {1} share a target")]
    NotInjective(String, String),
    #[error("map is not measure preserving")]
    NotMeasurePreserving,
    #[error("map is not a bijection of its truncated domain")]
    DomainMismatch,
    #[error("{count} intervals exceed the exhaustive search cap of {cap}; use the heuristic search")]
    TooLarge { count: usize, cap: usize },
    #[error("invalid blocks: {0}")]
    InvalidBlocks(String),
    #[error("invalid exponent {0}")]
    InvalidExponent(f64),
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("expansion does not have mean zero")]
    NotZeroMean,
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("decomposition does not reproduce the function (max error {0:e})")]
    DecompositionMismatch(f64),
    #[error("atom {index} is invalid: {reason}")]
    InvalidAtom { index: usize, reason: String },
    #[error("invalid stopping time: {0}")]
    InvalidStoppingTime(String),
    #[error("search budget must be positive")]
    InvalidBudget,
    #[error("weights are not constant on the intervals of level {0}")]
    InvalidWeights(u32),
    #[error("invalid adapted sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("invalid linear map: {0}")]
    InvalidMap(String),
    #[error("condition C not certified at root {0}")]
    ConditionNotCertified(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

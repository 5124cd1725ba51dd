use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} needs {needed}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("no reconstructing lattice with M <= {cap} for {card} frequencies")]
    SearchExhausted { card: usize, cap: u128 },

    #[error("{uncovered} of {card} frequencies aliased in every component (first: {first:?})")]
    CoverageFailure {
        uncovered: usize,
        card: usize,
        first: Vec<i64>,
    },

    #[error("sampler returned a non-finite value at node {index}")]
    NonFiniteSample { index: usize },

    #[error("frequency set is descriptor-only; operation needs materialized frequencies")]
    LazySet,

    #[error("sparse detection failed at {step}: {source}")]
    Detection {
        step: String,
        #[source]
        source: Box<Error>,
    },
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("score {value} at index {index} is not strictly positive and finite")]
    NonPositiveScore { index: usize, value: f64 },
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("item {0} compared with itself")]
    SameItem(usize),
    #[error("index {index} out of range for {n} items")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("invalid block model: {0}")]
    BlockSizeError(String),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("dataset edge set does not match graph edge set")]
    EdgeSetMismatch,
    #[error("graph is not connected")]
    NotConnected,
    #[error("vertex {0} has zero weighted degree")]
    IsolatedVertex(usize),
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("linear system is singular (reducible chain)")]
    SingularSystem,
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("no weighting satisfies the degree floor: {0}")]
    Infeasible(String),
    #[error("weight {weight} on edge ({i}, {j}) outside [0, 1]")]
    WeightOutOfRange { i: usize, j: usize, weight: f64 },
    #[error("edge ({0}, {1}) is not in the graph")]
    UnknownEdge(usize, usize),
    #[error("vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
}

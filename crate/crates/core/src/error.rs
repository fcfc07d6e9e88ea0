use thiserror::Error;

/// Errors produced by the exploration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("map format error at line {line}: {msg}")]
    MapFormat { line: usize, msg: String },

    #[error("graph parse error at line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    /// An operation was called outside its contract (wrong node type,
    /// unknown id, pose inside an obstacle, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    /// All configuration problems found during validation, reported at once.
    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// Tour planning found frontier nodes with no finite-cost path from the
    /// current node; the graph connectivity invariant is broken.
    #[error("unreachable frontier nodes: {0:?}")]
    UnreachableFrontiers(Vec<u64>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

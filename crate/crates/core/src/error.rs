use thiserror::Error;

use crate::summary_graph::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("invalid merge pair ({0}, {1})")]
    InvalidMergePair(NodeId, NodeId),

    #[error("supernode {0} is not alive")]
    DeadNode(NodeId),

    #[error("negative weight {weight} for vertex {vertex}")]
    NegativeWeight { vertex: u32, weight: f64 },

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("sample point {point} outside [0, {total})")]
    SamplePointOutOfRange { point: f64, total: f64 },

    #[error("vertex {0} has no leaf in the sampling tree")]
    UnknownLeaf(u32),

    #[error("vertex {0} already has a leaf in the sampling tree")]
    DuplicateLeaf(u32),

    #[error("tree full")]
    TreeFull,

    #[error("sketch dimensions must be positive (width {width}, depth {depth})")]
    ZeroSketchDimensions { width: usize, depth: usize },

    #[error("incompatible sketches")]
    IncompatibleSketches,

    #[error("degenerate weight distribution")]
    DegenerateWeights,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(u64),

    #[error("membership information was not retained")]
    MembersNotRetained,

    #[error("oracle limit exceeded: {vertices} vertices > limit {limit}")]
    OracleLimit { vertices: usize, limit: usize },

    #[error("oracle mismatch: closed form {closed} vs brute force {brute}")]
    OracleMismatch { closed: f64, brute: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid summary: {0}")]
    InvalidSummary(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Lossy graph summarization.
//!
//! An undirected graph is compressed into a weighted supergraph with `k`
//! supernodes by repeatedly merging the best pair out of a small weighted
//! sample. Each supernode records its size and internal edge count, each
//! superedge the number of original edges it stands for, and the graph is
//! reconstructed from these densities as an expected adjacency matrix.
//!
//! The main pieces:
//!
//! * [`summary_graph`]: the mutable supergraph and its merge operation.
//! * [`sampling_tree`]: a sum tree for dynamic weighted node sampling.
//! * [`cm_sketch`]: count-min sketches of neighbor vectors for fast
//!   inner-product estimates.
//! * [`summarizer`]: pair scores, node weights and the merge loop.
//! * [`evaluation`]: reconstruction error and query estimators.
//! * [`io`] and [`cli`]: edge-list ingest, the summary file format and the
//!   command-line pipeline.

pub mod cli;
pub mod cm_sketch;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod sampling_tree;
pub mod summarizer;
pub mod summary_graph;

pub use error::{Error, Result};
pub use summary_graph::{EdgeList, NodeId, SummaryGraph};

//! Set-based subgraph representation learning.
//!
//! Every node's neighbourhood is sampled offline into a unique node set with
//! per-member structural features. The sets live in a compressed sparse
//! store ([`spg::SpG`]) whose feature rows are interned into a shared bank.
//! At training and inference time, the sets of the nodes in a query are
//! outer-joined ([`spjoin::join`]) into a query-level feature matrix which a
//! small set-pooling network ([`model`]) turns into a prediction.

pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod sampling;
pub mod spg;
pub mod spjoin;

pub use error::{Error, Result};
pub use graph::{Graph, LabeledQuery, NodeId, Query};
pub use sampling::NodeSetSample;
pub use spg::SpG;
pub use spjoin::JoinedQuery;

use thiserror::Error;

use crate::topology::{Edge, Location, NodeId, Violation};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("{location}: {message}")]
    Malformed { location: Location, message: String },
    #[error("{}{violation}", location.map(|l| format!("{l}: ")).unwrap_or_default())]
    Invalid {
        location: Option<Location>,
        violation: Violation,
    },
    #[error("invalid topology json: {0}")]
    Json(String),
    #[error("unknown built-in topology `{0}`")]
    UnknownBuiltin(String),
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("mapping is not a permutation")]
    NotAPermutation,
}

#[derive(Debug, Error)]
pub enum QuorumError {
    #[error("invalid quorum base: {0}")]
    InvalidBase(String),
    #[error("no cyclic base on {n} nodes reaches redundancy {r}")]
    Infeasible { n: usize, r: usize },
    #[error(
        "search budget exhausted: sizes below {proven_below} proven infeasible, \
         stopped while exploring size {frontier}"
    )]
    BudgetExhausted { proven_below: usize, frontier: usize },
    #[error("quorum base file: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("no return path from {sink} to {start} avoids the seed path (bridge on path)")]
    NoReturnPath { start: NodeId, sink: NodeId },
    #[error("node {node} cannot be spliced into the cycle")]
    InsertionInfeasible { node: NodeId },
    #[error("no closed trail through all of {members:?}; bridges: {cut:?}")]
    Infeasible { members: Vec<NodeId>, cut: Vec<Edge> },
    #[error("invalid routing input: {0}")]
    InvalidInput(String),
    #[error("{} quorum(s) failed to route; first: quorum {}: {}", failures.len(), failures[0].0, failures[0].1)]
    Quorums { failures: Vec<(usize, RoutingError)> },
}

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("fault order {0} unsupported (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("unknown fault model `{0}`")]
    UnknownModel(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least 2 samples for a confidence interval, got {0}")]
    InsufficientSamples(usize),
    #[error("unknown output format `{0}`")]
    UnknownFormat(String),
    #[error("no rows to emit")]
    EmptyRows,
    #[error("experiment spec: {0}")]
    Spec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Umbrella error for the CLI and experiment orchestration.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Quorum(#[from] QuorumError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

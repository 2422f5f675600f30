//! Quorum-based cycle routing for optical networks.
//!
//! The pipeline runs from a cyclic R-redundant quorum base
//! ([`quorums`]), through one routed cycle per quorum ([`routing`]), to a
//! light-trail deployment ([`lighttrail`]) whose resource use and
//! link-fault coverage are measured exhaustively ([`faultsim`]) and
//! summarized across randomized node mappings ([`report`]).

pub mod error;
pub mod faultsim;
pub mod lighttrail;
pub mod quorums;
pub mod report;
pub mod routing;
pub mod topology;

pub use error::{Error, FaultError, QuorumError, ReportError, RoutingError, TopologyError};
pub use topology::{Edge, NodeId, NodeMapping, Topology};

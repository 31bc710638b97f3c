//! Domain types: metro topology, function catalog, applications and traffic flows.

mod topology;
mod traffic;
mod vnf;

pub use topology::{ArcId, Link, LinkDoc, Node, NodeId, NodeKind, Topology, TopologyDoc, FIBER_MS_PER_KM};
pub use traffic::{AppCatalog, Application, Direction, NasProcedure, TrafficFlow};
pub use vnf::{VnfCatalog, VnfId, VnfSpec, DEFAULT_CORES_PER_GBPS, DEFAULT_PROC_MS_PER_GBPS};

use crate::error::ModelError;

/// Shortest propagation latency between two nodes, in milliseconds.
pub fn shortest_path_latency(topology: &Topology, a: NodeId, b: NodeId) -> Result<f64, ModelError> {
    topology.shortest_path_latency(a, b)
}

/// Default 19-node metro topology bundled with the crate.
pub fn default_topology() -> Topology {
    Topology::from_json(include_str!("../../data/metro19.json")).expect("bundled topology is valid")
}

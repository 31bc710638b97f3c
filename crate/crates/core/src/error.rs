use std::path::PathBuf;

use thiserror::Error;

use crate::model::{NodeId, VnfId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate link id {0}")]
    DuplicateLink(u32),
    #[error("link {link} references nonexistent node {node}")]
    DanglingEndpoint { link: u32, node: NodeId },
    #[error("link {0} is a self-loop")]
    SelfLoop(u32),
    #[error("link {link}: {reason}")]
    InvalidLink { link: u32, reason: String },
    #[error("node {0} has cores but is not NFV-capable")]
    CoresOnNonNfv(NodeId),
    #[error("topology is disconnected: node {0} unreachable from node {1}")]
    Disconnected(NodeId, NodeId),
    #[error("topology has no nodes")]
    Empty,
    #[error("node {0} not in topology")]
    UnknownNode(NodeId),
    #[error("no path from node {0} to node {1}")]
    Unreachable(NodeId, NodeId),
    #[error("application catalog: {0}")]
    Catalog(String),
    #[error("VNF catalog: {0}")]
    Vnf(String),
    #[error("traffic flow {flow}: {reason}")]
    Flow { flow: u32, reason: String },
}

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("no control chain template for procedure {0}")]
    UnknownProcedure(String),
    #[error("template {procedure}: {reason}")]
    BadTemplate { procedure: String, reason: String },
    #[error("unknown application {0}")]
    UnknownApplication(String),
    #[error("no reachable destination for application {0}")]
    NoDestination(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum IlpError {
    #[error("function {0} is used by a chain but allows {1} replicas")]
    NoReplicas(VnfId, u32),
    #[error("chain {chain}: endpoint node {node} missing from topology")]
    MissingEndpoint { chain: u32, node: NodeId },
    #[error("chain {0}: {1}")]
    BadChain(u32, String),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solver executable not found: {0}")]
    SolverNotFound(String),
    #[error("solver exited with {status}: {stderr}")]
    SolverFailed { status: String, stderr: String },
    #[error("unparsable solver output: {0}")]
    Unparsable(String),
    #[error("solver objective {reported} disagrees with recomputed {recomputed}")]
    ObjectiveMismatch { reported: f64, recomputed: f64 },
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ilp(#[from] IlpError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot write results to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

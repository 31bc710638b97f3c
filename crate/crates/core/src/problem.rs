use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chains::ServiceChain;
use crate::model::{NodeId, Topology, TopologyDoc, VnfCatalog, VnfId};

/// How link capacity is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    /// Each direction of a fiber has the full capacity.
    #[default]
    PerArc,
    /// Both directions share the fiber's capacity.
    SharedFiber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    #[serde(default)]
    pub capacity_mode: CapacityMode,
    /// Optional cap on the number of nodes hosting any function.
    #[serde(default)]
    pub max_nfv_nodes: Option<u32>,
    /// Adds x_place ≤ x_loc rows next to the aggregated big-M replica rows.
    /// They cut off no integer point and tighten the LP relaxation.
    #[serde(default = "yes")]
    pub link_rows: bool,
}

fn yes() -> bool {
    true
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { capacity_mode: CapacityMode::PerArc, max_nfv_nodes: None, link_rows: true }
    }
}

/// Everything a solver or the verifier needs: network, chains, function specs
/// (including replica limits) and model switches.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem {
    pub topology: Topology,
    pub chains: Vec<ServiceChain>,
    pub vnfs: VnfCatalog,
    pub options: ModelOptions,
}

impl PlacementProblem {
    pub fn new(topology: Topology, chains: Vec<ServiceChain>, vnfs: VnfCatalog) -> Self {
        PlacementProblem { topology, chains, vnfs, options: ModelOptions::default() }
    }

    pub fn chain(&self, id: u32) -> Option<&ServiceChain> {
        self.chains.iter().find(|c| c.id == id)
    }

    /// Real functions appearing in at least one chain.
    pub fn used_functions(&self) -> BTreeSet<VnfId> {
        self.chains
            .iter()
            .flat_map(|c| c.positions.iter().map(|p| p.function))
            .filter(|f| !f.is_pseudo())
            .collect()
    }

    /// V^NFV ∪ SD_c
    pub fn candidate_nodes(&self, chain: &ServiceChain) -> Vec<NodeId> {
        let mut nodes: BTreeSet<NodeId> = self.topology.nfv_nodes().collect();
        nodes.extend(chain.endpoints());
        nodes.into_iter().collect()
    }

    /// Total number of (chain, position) pairs.
    pub fn position_count(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = ProblemDoc {
            topology: self.topology.to_document(),
            chains: self.chains.clone(),
            vnfs: self.vnfs.clone(),
            options: self.options.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("problem serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, crate::error::ChainError> {
        let doc: ProblemDoc = serde_json::from_str(text).map_err(crate::error::ModelError::from)?;
        let topology = Topology::from_document(doc.topology)?;
        for chain in &doc.chains {
            chain.validate()?;
        }
        Ok(PlacementProblem { topology, chains: doc.chains, vnfs: doc.vnfs, options: doc.options })
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    topology: TopologyDoc,
    chains: Vec<ServiceChain>,
    vnfs: VnfCatalog,
    #[serde(default)]
    options: ModelOptions,
}

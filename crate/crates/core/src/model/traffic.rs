use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{NodeId, NodeKind, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NasProcedure {
    Attach,
    DedicatedBearer,
    X2Handover,
    S1Handover,
}

impl NasProcedure {
    pub const ALL: [NasProcedure; 4] = [
        NasProcedure::Attach,
        NasProcedure::DedicatedBearer,
        NasProcedure::X2Handover,
        NasProcedure::S1Handover,
    ];

    /// Control-plane budget by bearer type: dedicated bearers 250 ms, default bearers 500 ms.
    pub fn control_latency_ms(self) -> f64 {
        match self {
            NasProcedure::DedicatedBearer => 250.0,
            NasProcedure::Attach | NasProcedure::X2Handover | NasProcedure::S1Handover => 500.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NasProcedure::Attach => "attach",
            NasProcedure::DedicatedBearer => "dedicated_bearer",
            NasProcedure::X2Handover => "x2_handover",
            NasProcedure::S1Handover => "s1_handover",
        }
    }
}

impl fmt::Display for NasProcedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NasProcedure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NasProcedure::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown NAS procedure {s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upload,
    Download,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Application {
    pub name: String,
    pub traffic_share: f64,
    pub latency_budget_ms: f64,
    pub gateway_nodes: Vec<NodeId>,
    #[serde(default)]
    pub mec_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppCatalog {
    pub apps: Vec<Application>,
}

impl AppCatalog {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn get(&self, name: &str) -> Option<&Application> {
        self.apps.iter().find(|a| a.name == name)
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::Catalog(msg));
        if self.apps.is_empty() {
            return err("no applications".into());
        }
        let mut total = 0.0;
        for app in &self.apps {
            if !(0.0..=1.0).contains(&app.traffic_share) {
                return err(format!("{}: share {} outside [0,1]", app.name, app.traffic_share));
            }
            if app.latency_budget_ms.is_nan() || app.latency_budget_ms < 0.0 {
                return err(format!("{}: negative latency budget", app.name));
            }
            if app.gateway_nodes.is_empty() && app.mec_nodes.is_empty() {
                return err(format!("{}: no gateway or MEC node", app.name));
            }
            if self.apps.iter().filter(|a| a.name == app.name).count() > 1 {
                return err(format!("{} listed twice", app.name));
            }
            for (nodes, kind) in [(&app.gateway_nodes, NodeKind::AppGateway), (&app.mec_nodes, NodeKind::MecHost)] {
                for &id in nodes {
                    match topology.node(id) {
                        None => return err(format!("{}: node {id} not in topology", app.name)),
                        Some(n) if n.kind != kind => {
                            return err(format!("{}: node {id} is {:?}, expected {:?}", app.name, n.kind, kind))
                        }
                        Some(_) => {}
                    }
                }
            }
            total += app.traffic_share;
        }
        if (total - 1.0).abs() > 1e-9 {
            return err(format!("traffic shares sum to {total}, expected 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficFlow {
    pub id: u32,
    pub source_tap: NodeId,
    pub application: String,
    pub direction: Direction,
    pub nas_procedure: Option<NasProcedure>,
    pub demand_gbps: f64,
    pub control_latency_budget_ms: f64,
}

impl TrafficFlow {
    pub fn validate(&self, topology: &Topology) -> Result<(), ModelError> {
        let fail = |reason: String| Err(ModelError::Flow { flow: self.id, reason });
        if !(self.demand_gbps.is_finite() && self.demand_gbps > 0.0) {
            return fail(format!("demand {} must be positive", self.demand_gbps));
        }
        match topology.node(self.source_tap) {
            None => fail(format!("source node {} not in topology", self.source_tap)),
            Some(n) if n.kind != NodeKind::Tap => fail(format!("source node {} is not a TAP", self.source_tap)),
            Some(_) => Ok(()),
        }
    }
}

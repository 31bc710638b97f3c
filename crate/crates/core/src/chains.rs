//! Service-chain construction.
//!
//! A chain is the ordered list of functions a flow visits. Control signaling
//! (a NAS procedure) is a loop that leaves the TAP and returns to it; user
//! data crosses SGW and PGW between the TAP and the application endpoint.
//! Positions are listed in traffic direction, so downloads start at the
//! gateway and the signaling loop hangs off the TAP at the end of the chain.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ChainError, ModelError};
use crate::model::{AppCatalog, Direction, NasProcedure, NodeId, Topology, TrafficFlow, VnfId};

/// Share of a flow's demand carried by signaling segments.
pub const DEFAULT_CONTROL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChainPosition {
    pub function: VnfId,
    pub instance: u32,
}

impl ChainPosition {
    pub const fn new(function: VnfId, instance: u32) -> Self {
        ChainPosition { function, instance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceChain {
    pub id: u32,
    /// Node hosting the SRC pseudo-function.
    pub source: NodeId,
    /// Node hosting the DST pseudo-function.
    pub dest: NodeId,
    pub positions: Vec<ChainPosition>,
    /// `betas[i]` is the demand fraction on the segment leaving position `i`
    /// (1-based); `betas[0]` mirrors `betas[1]`.
    pub betas: Vec<f64>,
    pub demand_gbps: f64,
    pub latency_budget_ms: f64,
}

impl ServiceChain {
    pub fn new(
        id: u32,
        source: NodeId,
        dest: NodeId,
        positions: Vec<ChainPosition>,
        segment_betas: Vec<f64>,
        demand_gbps: f64,
        latency_budget_ms: f64,
    ) -> Result<Self, ChainError> {
        let mut betas = Vec::with_capacity(segment_betas.len() + 1);
        betas.push(segment_betas.first().copied().unwrap_or(1.0));
        betas.extend(segment_betas);
        let chain = ServiceChain { id, source, dest, positions, betas, demand_gbps, latency_budget_ms };
        chain.validate()?;
        Ok(chain)
    }

    /// n_c
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// 1-based position accessor.
    pub fn position(&self, i: usize) -> ChainPosition {
        self.positions[i - 1]
    }

    /// β_i for 0 ≤ i < n_c.
    pub fn beta(&self, i: usize) -> f64 {
        self.betas[i]
    }

    /// Traffic carried on segment `i` (from position i to i+1), in Gbps.
    pub fn segment_load(&self, i: usize) -> f64 {
        self.demand_gbps * self.betas[i]
    }

    /// Traffic entering position `i`, in Gbps.
    pub fn inbound_load(&self, i: usize) -> f64 {
        self.demand_gbps * self.betas[i - 1]
    }

    pub fn segments(&self) -> std::ops::Range<usize> {
        1..self.positions.len()
    }

    /// Home node of a pseudo-function position; `None` for real functions.
    pub fn home(&self, i: usize) -> Option<NodeId> {
        match self.position(i).function {
            VnfId::Src => Some(self.source),
            VnfId::Dst => Some(self.dest),
            _ => None,
        }
    }

    /// SD_c
    pub fn endpoints(&self) -> [NodeId; 2] {
        [self.source, self.dest]
    }

    /// Distinct (function, instance) pairs of real functions, by first appearance.
    pub fn instance_groups(&self) -> Vec<ChainPosition> {
        let mut out: Vec<ChainPosition> = Vec::new();
        for p in &self.positions {
            if !p.function.is_pseudo() && !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }

    pub fn uses(&self, f: VnfId) -> bool {
        self.positions.iter().any(|p| p.function == f)
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        let bad = |reason: String| ChainError::BadTemplate { procedure: format!("chain {}", self.id), reason };
        let n = self.positions.len();
        if n < 2 {
            return Err(bad(format!("needs at least 2 positions, has {n}")));
        }
        if self.betas.len() != n {
            return Err(bad(format!("{} betas for {n} positions", self.betas.len())));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
            return Err(bad(format!("beta {b} outside (0, 1]")));
        }
        if !(self.demand_gbps.is_finite() && self.demand_gbps > 0.0) {
            return Err(bad(format!("demand {} must be positive", self.demand_gbps)));
        }
        if self.latency_budget_ms.is_nan() || self.latency_budget_ms < 0.0 {
            return Err(bad("negative latency budget".into()));
        }
        if self.positions[0].function != VnfId::Src {
            return Err(bad("first position must be SRC".into()));
        }
        if !self.positions[n - 1].function.is_pseudo() {
            return Err(bad("last position must be a pseudo-function".into()));
        }
        check_labels(&self.positions).map_err(bad)
    }
}

/// Instance labels of each function must be exactly {1, …, χ}.
fn check_labels(seq: &[ChainPosition]) -> Result<(), String> {
    let mut labels: BTreeMap<VnfId, Vec<u32>> = BTreeMap::new();
    for p in seq {
        if p.instance == 0 {
            return Err(format!("{} has instance label 0", p.function));
        }
        labels.entry(p.function).or_default().push(p.instance);
    }
    for (f, mut l) in labels {
        l.sort_unstable();
        l.dedup();
        if l.iter().enumerate().any(|(k, &x)| x != k as u32 + 1) {
            return Err(format!("{f} instance labels {l:?} are not contiguous from 1"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscTemplate {
    pub procedure: NasProcedure,
    pub sequence: Vec<ChainPosition>,
}

impl CscTemplate {
    fn validate(&self) -> Result<(), ChainError> {
        let bad = |reason: &str| ChainError::BadTemplate {
            procedure: self.procedure.to_string(),
            reason: reason.to_owned(),
        };
        let seq = &self.sequence;
        if seq.len() < 3 {
            return Err(bad("signaling loop needs SRC, at least one function, SRC"));
        }
        if seq[0].function != VnfId::Src || seq[seq.len() - 1].function != VnfId::Src {
            return Err(bad("must start and end at SRC"));
        }
        if seq[1..seq.len() - 1].iter().any(|p| p.function.is_pseudo()) {
            return Err(bad("pseudo-function inside the signaling loop"));
        }
        check_labels(seq).map_err(|r| bad(&r))
    }
}

/// Control-chain templates keyed by NAS procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<CscTemplate>", try_from = "Vec<CscTemplate>")]
pub struct TemplateSet {
    templates: BTreeMap<NasProcedure, Vec<ChainPosition>>,
}

impl TemplateSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ChainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ChainError> {
        let list: Vec<CscTemplate> = serde_json::from_str(text).map_err(ModelError::from)?;
        list.try_into()
    }

    /// Control chain for a procedure; an empty sequence for pure data flows.
    pub fn build_csc(&self, procedure: Option<NasProcedure>) -> Result<Vec<ChainPosition>, ChainError> {
        match procedure {
            None => Ok(Vec::new()),
            Some(p) => self
                .templates
                .get(&p)
                .cloned()
                .ok_or_else(|| ChainError::UnknownProcedure(p.to_string())),
        }
    }

    /// Looks a procedure up by its textual id.
    pub fn build_csc_named(&self, procedure: &str) -> Result<Vec<ChainPosition>, ChainError> {
        let p = procedure
            .parse::<NasProcedure>()
            .map_err(|_| ChainError::UnknownProcedure(procedure.to_owned()))?;
        self.build_csc(Some(p))
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::from_json(include_str!("../data/templates.json")).expect("bundled templates are valid")
    }
}

impl From<TemplateSet> for Vec<CscTemplate> {
    fn from(t: TemplateSet) -> Self {
        t.templates
            .into_iter()
            .map(|(procedure, sequence)| CscTemplate { procedure, sequence })
            .collect()
    }
}

impl TryFrom<Vec<CscTemplate>> for TemplateSet {
    type Error = ChainError;

    fn try_from(list: Vec<CscTemplate>) -> Result<Self, Self::Error> {
        let mut templates = BTreeMap::new();
        for t in list {
            t.validate()?;
            if templates.insert(t.procedure, t.sequence).is_some() {
                return Err(ChainError::BadTemplate {
                    procedure: t.procedure.to_string(),
                    reason: "defined twice".into(),
                });
            }
        }
        Ok(TemplateSet { templates })
    }
}

/// Gateway functions a data flow crosses, in traffic order.
pub fn build_dsc(direction: Direction) -> Vec<ChainPosition> {
    let sgw = ChainPosition::new(VnfId::Sgw, 1);
    let pgw = ChainPosition::new(VnfId::Pgw, 1);
    match direction {
        Direction::Upload => vec![sgw, pgw],
        Direction::Download => vec![pgw, sgw],
    }
}

/// Where a flow's application traffic terminates: the lowest-latency MEC
/// host when the application has any, otherwise the lowest-latency gateway.
pub fn select_destination(flow: &TrafficFlow, apps: &AppCatalog, topology: &Topology) -> Result<NodeId, ChainError> {
    let app = apps
        .get(&flow.application)
        .ok_or_else(|| ChainError::UnknownApplication(flow.application.clone()))?;
    let candidates = if app.mec_nodes.iter().any(|&m| topology.contains(m)) {
        &app.mec_nodes
    } else {
        &app.gateway_nodes
    };
    let mut best: Option<(f64, NodeId)> = None;
    for &node in candidates {
        let Ok(d) = topology.shortest_path_latency(flow.source_tap, node) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((bd, bn)) => d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && node < bn),
        };
        if better {
            best = Some((d, node));
        }
    }
    best.map(|(_, n)| n).ok_or_else(|| ChainError::NoDestination(app.name.clone()))
}

pub fn compose_chain(
    flow: &TrafficFlow,
    apps: &AppCatalog,
    templates: &TemplateSet,
    topology: &Topology,
    control_fraction: f64,
) -> Result<ServiceChain, ChainError> {
    flow.validate(topology)?;
    let app = apps
        .get(&flow.application)
        .ok_or_else(|| ChainError::UnknownApplication(flow.application.clone()))?;
    let endpoint = select_destination(flow, apps, topology)?;
    let csc = templates.build_csc(flow.nas_procedure)?;
    let dsc = build_dsc(flow.direction);

    let mut positions = Vec::new();
    let mut betas = Vec::new();
    let (source, dest) = match flow.direction {
        Direction::Upload => {
            if csc.is_empty() {
                positions.push(ChainPosition::new(VnfId::Src, 1));
            } else {
                positions.extend_from_slice(&csc);
                betas.extend(std::iter::repeat_n(control_fraction, csc.len() - 1));
            }
            positions.extend_from_slice(&dsc);
            positions.push(ChainPosition::new(VnfId::Dst, 1));
            betas.extend(std::iter::repeat_n(1.0, dsc.len() + 1));
            (flow.source_tap, endpoint)
        }
        Direction::Download => {
            positions.push(ChainPosition::new(VnfId::Src, 1));
            positions.extend_from_slice(&dsc);
            positions.push(ChainPosition::new(VnfId::Dst, 1));
            betas.extend(std::iter::repeat_n(1.0, dsc.len() + 1));
            if !csc.is_empty() {
                // the signaling loop is anchored at the TAP, which is DST here
                positions.extend_from_slice(&csc[1..csc.len() - 1]);
                positions.push(ChainPosition::new(VnfId::Dst, 1));
                betas.extend(std::iter::repeat_n(control_fraction, csc.len() - 1));
            }
            (endpoint, flow.source_tap)
        }
    };
    let budget = flow.control_latency_budget_ms + app.latency_budget_ms;
    ServiceChain::new(flow.id, source, dest, positions, betas, flow.demand_gbps, budget)
}

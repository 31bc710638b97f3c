use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Propagation delay of single-mode fiber, 2×10⁸ m/s.
pub const FIBER_MS_PER_KM: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a directed arc in [`Topology::arcs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub usize);

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Switch,
    Tap,
    AppGateway,
    MecHost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub nfv_capable: bool,
    #[serde(default)]
    pub cores: u32,
}

/// A directed arc. Every fiber in the topology document becomes two arcs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub id: ArcId,
    /// Link id from the topology document.
    pub fiber: u32,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity_gbps: f64,
    pub length_km: f64,
    pub prop_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub id: u32,
    pub a: NodeId,
    pub b: NodeId,
    pub capacity_gbps: f64,
    pub length_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDoc {
    pub nodes: Vec<Node>,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    arcs: Vec<Link>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.arcs == other.arcs
    }
}

impl Topology {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: TopologyDoc = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: TopologyDoc) -> Result<Self, ModelError> {
        if doc.nodes.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut nodes = doc.nodes;
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id, i).is_some() {
                return Err(ModelError::DuplicateNode(node.id));
            }
            if node.cores > 0 && !node.nfv_capable {
                return Err(ModelError::CoresOnNonNfv(node.id));
            }
        }

        let mut seen = HashSet::new();
        let mut arcs = Vec::with_capacity(doc.links.len() * 2);
        for link in &doc.links {
            if !seen.insert(link.id) {
                return Err(ModelError::DuplicateLink(link.id));
            }
            for end in [link.a, link.b] {
                if !index.contains_key(&end) {
                    return Err(ModelError::DanglingEndpoint { link: link.id, node: end });
                }
            }
            if link.a == link.b {
                return Err(ModelError::SelfLoop(link.id));
            }
            let invalid = |reason: &str| ModelError::InvalidLink {
                link: link.id,
                reason: reason.to_owned(),
            };
            if !(link.capacity_gbps.is_finite() && link.capacity_gbps > 0.0) {
                return Err(invalid("capacity must be positive"));
            }
            if !(link.length_km.is_finite() && link.length_km >= 0.0) {
                return Err(invalid("length must be non-negative"));
            }
            let latency = link.prop_latency_ms.unwrap_or(link.length_km * FIBER_MS_PER_KM);
            if !(latency.is_finite() && latency >= 0.0) {
                return Err(invalid("propagation latency must be non-negative"));
            }
            for (from, to) in [(link.a, link.b), (link.b, link.a)] {
                arcs.push(Link {
                    id: ArcId(arcs.len()),
                    fiber: link.id,
                    from,
                    to,
                    capacity_gbps: link.capacity_gbps,
                    length_km: link.length_km,
                    prop_latency_ms: latency,
                });
            }
        }

        let mut out_arcs = vec![Vec::new(); nodes.len()];
        let mut in_arcs = vec![Vec::new(); nodes.len()];
        for arc in &arcs {
            out_arcs[index[&arc.from]].push(arc.id);
            in_arcs[index[&arc.to]].push(arc.id);
        }
        // neighbours are visited in ascending node id everywhere
        for list in out_arcs.iter_mut() {
            list.sort_by_key(|a| (arcs[a.0].to, a.0));
        }
        for list in in_arcs.iter_mut() {
            list.sort_by_key(|a| (arcs[a.0].from, a.0));
        }

        let topo = Topology { nodes, index, arcs, out_arcs, in_arcs };
        topo.check_connected()?;
        Ok(topo)
    }

    fn check_connected(&self) -> Result<(), ModelError> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for arc in self.out_arcs[u].iter().chain(&self.in_arcs[u]) {
                let link = &self.arcs[arc.0];
                for end in [link.from, link.to] {
                    let v = self.index[&end];
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(ModelError::Disconnected(self.nodes[i].id, self.nodes[0].id)),
            None => Ok(()),
        }
    }

    /// Inverse of [`Topology::from_document`]; arc pairs fold back into one link each.
    pub fn to_document(&self) -> TopologyDoc {
        let links = self
            .arcs
            .chunks(2)
            .map(|pair| {
                let arc = &pair[0];
                let default = arc.length_km * FIBER_MS_PER_KM;
                LinkDoc {
                    id: arc.fiber,
                    a: arc.from,
                    b: arc.to,
                    capacity_gbps: arc.capacity_gbps,
                    length_km: arc.length_km,
                    prop_latency_ms: (arc.prop_latency_ms != default).then_some(arc.prop_latency_ms),
                }
            })
            .collect();
        TopologyDoc { nodes: self.nodes.clone(), links }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("topology serializes")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// Dense position of a node, in ascending id order.
    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn is_nfv(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(|n| n.nfv_capable)
    }

    pub fn nfv_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.nfv_capable).map(|n| n.id)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    pub fn arcs(&self) -> &[Link] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Link {
        &self.arcs[id.0]
    }

    /// ω⁺(v)
    pub fn out_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.out_arcs[self.index[&v]]
    }

    /// ω⁻(v)
    pub fn in_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.in_arcs[self.index[&v]]
    }

    /// Arc in the opposite direction on the same fiber.
    pub fn reverse_arc(&self, id: ArcId) -> ArcId {
        ArcId(id.0 ^ 1)
    }

    /// Minimal total propagation latency over directed paths from `a` to `b`.
    pub fn shortest_path_latency(&self, a: NodeId, b: NodeId) -> Result<f64, ModelError> {
        let path = self.shortest_path_by(a, b, |l| l.prop_latency_ms)?;
        Ok(path.iter().map(|&arc| self.arc(arc).prop_latency_ms).sum())
    }

    /// Fewest-hop path; ties resolve toward lower node ids.
    pub fn min_hop_path(&self, a: NodeId, b: NodeId) -> Result<Vec<ArcId>, ModelError> {
        self.shortest_path_by(a, b, |_| 1.0)
    }

    /// Dijkstra with non-negative arc weights. Returns the arc sequence from `a` to `b`.
    pub fn shortest_path_by<W>(&self, a: NodeId, b: NodeId, weight: W) -> Result<Vec<ArcId>, ModelError>
    where
        W: Fn(&Link) -> f64,
    {
        let src = self.node_index(a).ok_or(ModelError::UnknownNode(a))?;
        let dst = self.node_index(b).ok_or(ModelError::UnknownNode(b))?;
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<ArcId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: src });
        while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == dst {
                break;
            }
            for &arc in &self.out_arcs[u] {
                let link = &self.arcs[arc.0];
                let v = self.index[&link.to];
                let nd = d + weight(link);
                if nd < dist[v] - 1e-12 {
                    dist[v] = nd;
                    pred[v] = Some(arc);
                    heap.push(HeapEntry { dist: nd, node: v });
                }
            }
        }
        if !dist[dst].is_finite() {
            return Err(ModelError::Unreachable(a, b));
        }
        let mut path = Vec::new();
        let mut cur = dst;
        while let Some(arc) = pred[cur] {
            path.push(arc);
            cur = self.index[&self.arcs[arc.0].from];
        }
        path.reverse();
        Ok(path)
    }

    /// All-pairs hop counts indexed by dense node position.
    pub fn hop_matrix(&self) -> Vec<Vec<u32>> {
        let n = self.nodes.len();
        let mut out = vec![vec![u32::MAX; n]; n];
        for (s, row) in out.iter_mut().enumerate() {
            row[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &arc in &self.out_arcs[u] {
                    let v = self.index[&self.arcs[arc.0].to];
                    if row[v] == u32::MAX {
                        row[v] = row[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        out
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

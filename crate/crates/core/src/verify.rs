//! Independent solution checker.
//!
//! Everything here is recomputed from the problem data (chains, topology,
//! function specs). Nothing is read back from the integer model, so a wrong
//! coefficient in the model builder shows up as a disagreement between the
//! solver and this module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ilp::{Family, Provenance};
use crate::model::{ArcId, NodeId, VnfId};
use crate::problem::{CapacityMode, PlacementProblem};
use crate::solve::PlacementSolution;

/// Relative tolerance for the objective and for capacity/latency rows.
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: Family,
    #[serde(flatten)]
    pub at: Provenance,
    /// Amount by which the row is off, in the row's own units.
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySlack {
    pub chain: u32,
    pub latency_ms: f64,
    pub budget_ms: f64,
    pub slack_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreUsage {
    pub node: NodeId,
    pub used: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkUsage {
    pub arc: ArcId,
    pub from: NodeId,
    pub to: NodeId,
    pub load_gbps: f64,
    pub capacity_gbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
    pub reported_objective: f64,
    pub recomputed_objective: f64,
    pub latency: Vec<LatencySlack>,
    pub cores: Vec<CoreUsage>,
    pub links: Vec<LinkUsage>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn families(&self) -> BTreeSet<Family> {
        self.violations.iter().map(|v| v.family).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objective  reported {:.6}  recomputed {:.6}", self.reported_objective, self.recomputed_objective)?;
        if self.violations.is_empty() {
            writeln!(f, "violations none")?;
        } else {
            writeln!(f, "{:<10} {:>6} {:>5} {:>6} {:>6} {:>12}  detail", "family", "chain", "pos", "node", "arc", "magnitude")?;
            let dash = |x: Option<String>| x.unwrap_or_else(|| "-".into());
            for v in &self.violations {
                writeln!(
                    f,
                    "{:<10} {:>6} {:>5} {:>6} {:>6} {:>12.6}  {}",
                    v.family.as_str(),
                    dash(v.at.chain.map(|c| c.to_string())),
                    dash(v.at.position.map(|c| c.to_string())),
                    dash(v.at.node.map(|c| c.to_string())),
                    dash(v.at.arc.map(|c| c.to_string())),
                    v.magnitude,
                    v.detail
                )?;
            }
        }
        let tight = self.latency.iter().min_by(|a, b| a.slack_ms.total_cmp(&b.slack_ms));
        if let Some(t) = tight {
            writeln!(f, "tightest latency  chain {}  {:.3} of {:.3} ms", t.chain, t.latency_ms, t.budget_ms)?;
        }
        let busiest = self.links.iter().max_by(|a, b| (a.load_gbps / a.capacity_gbps).total_cmp(&(b.load_gbps / b.capacity_gbps)));
        if let Some(l) = busiest {
            writeln!(f, "busiest arc  {} ({}->{})  {:.3} of {:.0} Gbps", l.arc, l.from, l.to, l.load_gbps, l.capacity_gbps)?;
        }
        let cores = self.cores.iter().max_by(|a, b| (a.used / a.capacity).total_cmp(&(b.used / b.capacity)));
        if let Some(c) = cores {
            writeln!(f, "busiest node  {}  {:.3} of {:.0} cores", c.node, c.used, c.capacity)?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn flag(&mut self, family: Family, at: Provenance, magnitude: f64, detail: impl Into<String>) {
        self.out.push(Violation { family, at, magnitude, detail: detail.into() });
    }

    fn over(&mut self, family: Family, at: Provenance, value: f64, limit: f64, what: &str) {
        if value > limit + TOLERANCE * limit.abs().max(1.0) {
            self.flag(family, at, value - limit, format!("{what} {value:.6} exceeds {limit:.6}"));
        }
    }
}

/// Re-evaluates every constraint family and the objective of `solution`.
pub fn check_solution(problem: &PlacementProblem, solution: &PlacementSolution) -> VerificationReport {
    let topo = &problem.topology;
    let mut ck = Checker { out: Vec::new() };

    // structure
    let mut placed: BTreeMap<(u32, usize), (u32, NodeId)> = BTreeMap::new();
    for a in &solution.assignments {
        let at = Provenance { chain: Some(a.chain), position: Some(a.position), node: Some(a.node), ..Default::default() };
        let known = problem.chain(a.chain).is_some_and(|c| (1..=c.len()).contains(&a.position));
        if !known {
            ck.flag(Family::Structure, at, 1.0, "assignment to an unknown chain position");
        } else if !topo.contains(a.node) {
            ck.flag(Family::Structure, at, 1.0, "assignment to an unknown node");
        } else if placed.insert((a.chain, a.position), (a.instance, a.node)).is_some() {
            ck.flag(Family::Structure, at, 1.0, "position assigned twice");
        }
    }
    let mut routes: BTreeMap<(u32, usize), &[ArcId]> = BTreeMap::new();
    for r in &solution.routes {
        let at = Provenance { chain: Some(r.chain), position: Some(r.segment), ..Default::default() };
        let known = problem.chain(r.chain).is_some_and(|c| c.segments().contains(&r.segment));
        if !known {
            ck.flag(Family::Structure, at, 1.0, "route for an unknown segment");
            continue;
        }
        if let Some(&bad) = r.arcs.iter().find(|a| a.0 >= topo.arcs().len()) {
            ck.flag(Family::Structure, Provenance { arc: Some(bad), ..at }, 1.0, "route uses an unknown arc");
            continue;
        }
        let distinct: BTreeSet<_> = r.arcs.iter().collect();
        if distinct.len() != r.arcs.len() {
            ck.flag(Family::Structure, at, (r.arcs.len() - distinct.len()) as f64, "route uses an arc more than once");
        }
        if routes.insert((r.chain, r.segment), &r.arcs).is_some() {
            ck.flag(Family::Structure, at, 1.0, "segment routed twice");
        }
    }
    for chain in &problem.chains {
        for i in 1..=chain.len() {
            let at = Provenance { chain: Some(chain.id), position: Some(i), ..Default::default() };
            match placed.get(&(chain.id, i)) {
                None => ck.flag(Family::Structure, at, 1.0, "position not assigned"),
                Some(&(instance, _)) if instance != chain.position(i).instance => {
                    ck.flag(Family::Structure, at, 1.0, format!("instance {instance} does not match the chain"))
                }
                _ => {}
            }
        }
        for i in chain.segments() {
            if !routes.contains_key(&(chain.id, i)) {
                let at = Provenance { chain: Some(chain.id), position: Some(i), ..Default::default() };
                ck.flag(Family::Structure, at, 1.0, "segment has no route");
            }
        }
    }
    let node_at = |c: u32, i: usize| placed.get(&(c, i)).map(|&(_, v)| v);

    // placement rows
    let mut hosts: BTreeMap<(NodeId, VnfId), u32> = BTreeMap::new();
    let mut cores_used: BTreeMap<NodeId, f64> = BTreeMap::new();
    for chain in &problem.chains {
        let mut first: HashMap<(VnfId, u32), (usize, NodeId)> = HashMap::new();
        for i in 1..=chain.len() {
            let Some(v) = node_at(chain.id, i) else { continue };
            let p = chain.position(i);
            let at = Provenance { chain: Some(chain.id), position: Some(i), node: Some(v), function: Some(p.function), arc: None };
            if let Some(home) = chain.home(i) {
                if v != home {
                    ck.flag(Family::Eq2, at, 1.0, format!("{} must sit on {home}", p.function));
                }
                continue;
            }
            let nfv = topo.node(v).is_some_and(|n| n.nfv_capable);
            if !nfv {
                if chain.endpoints().contains(&v) {
                    ck.flag(Family::Eq3, at, 1.0, "real function on a non-NFV endpoint");
                }
                ck.flag(Family::Eq4, at, 1.0, "real function outside the NFV nodes");
            }
            match first.get(&(p.function, p.instance)) {
                Some(&(anchor, u)) if u != v => {
                    ck.flag(Family::Colocate, at, 1.0, format!("position {anchor} of the same instance is on {u}"));
                }
                Some(_) => {}
                None => {
                    first.insert((p.function, p.instance), (i, v));
                }
            }
            *hosts.entry((v, p.function)).or_insert(0) += 1;
            let spec = problem.vnfs.spec(p.function);
            *cores_used.entry(v).or_insert(0.0) += chain.inbound_load(i) * spec.cores_per_gbps;
        }
    }

    // location rows
    let declared: BTreeSet<(NodeId, VnfId)> = solution.locations.iter().map(|l| (l.node, l.function)).collect();
    for &(v, f) in &declared {
        let at = Provenance { node: Some(v), function: Some(f), ..Default::default() };
        if f.is_pseudo() || !topo.is_nfv(v) {
            ck.flag(Family::Structure, at, 1.0, "location outside NFV nodes or for a pseudo-function");
        } else if !hosts.contains_key(&(v, f)) {
            ck.flag(Family::Eq7, at, 1.0, "location declared but nothing placed there");
        }
    }
    for (&(v, f), &n) in &hosts {
        if !declared.contains(&(v, f)) {
            let at = Provenance { node: Some(v), function: Some(f), ..Default::default() };
            ck.flag(Family::Eq7, at, n as f64, "placements without a declared location");
        }
    }
    let mut replicas: BTreeMap<VnfId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(v, f) in declared.iter().chain(hosts.keys()) {
        if !f.is_pseudo() {
            replicas.entry(f).or_default().insert(v);
        }
    }
    for (&f, nodes) in &replicas {
        let at = Provenance { function: Some(f), ..Default::default() };
        let limit = problem.vnfs.max_replicas(f) as f64;
        ck.over(Family::Eq8, at, nodes.len() as f64, limit, "replicas");
    }
    if let Some(cap) = problem.options.max_nfv_nodes {
        let used: BTreeSet<NodeId> = replicas.values().flatten().copied().collect();
        ck.over(Family::NodeCount, Provenance::default(), used.len() as f64, cap as f64, "hosting nodes");
    }
    let mut cores = Vec::new();
    for node in topo.nodes() {
        let used = cores_used.get(&node.id).copied().unwrap_or(0.0);
        if node.nfv_capable {
            ck.over(Family::Eq9, Provenance { node: Some(node.id), ..Default::default() }, used, node.cores as f64, "cores");
            cores.push(CoreUsage { node: node.id, used, capacity: node.cores as f64 });
        }
    }

    // routing rows
    let candidates = |c: &crate::chains::ServiceChain, v: NodeId| topo.is_nfv(v) || c.endpoints().contains(&v);
    let mut arc_load = vec![0.0; topo.arcs().len()];
    let mut objective = 0.0;
    let mut latency = Vec::new();
    for chain in &problem.chains {
        let mut prop = 0.0;
        for i in chain.segments() {
            let Some(arcs) = routes.get(&(chain.id, i)) else { continue };
            let load = chain.segment_load(i);
            let mut net: BTreeMap<NodeId, i64> = BTreeMap::new();
            for &a in arcs.iter() {
                let link = topo.arc(a);
                *net.entry(link.from).or_insert(0) += 1;
                *net.entry(link.to).or_insert(0) -= 1;
                arc_load[a.0] += load;
                prop += link.prop_latency_ms;
                objective += load;
            }
            let (Some(s), Some(t)) = (node_at(chain.id, i), node_at(chain.id, i + 1)) else { continue };
            if s != t {
                *net.entry(s).or_insert(0) -= 1;
                *net.entry(t).or_insert(0) += 1;
            }
            for (&v, &imbalance) in &net {
                if imbalance != 0 {
                    let family = if candidates(chain, v) { Family::Eq5 } else { Family::Eq6 };
                    let at = Provenance { chain: Some(chain.id), position: Some(i), node: Some(v), ..Default::default() };
                    ck.flag(family, at, imbalance.unsigned_abs() as f64, format!("net outflow off by {imbalance}"));
                }
            }
        }
        let processing: f64 = (1..=chain.len())
            .map(|i| (i, chain.position(i).function))
            .filter(|(_, f)| !f.is_pseudo())
            .map(|(i, f)| chain.inbound_load(i) * problem.vnfs.spec(f).proc_latency_ms_per_gbps)
            .sum();
        let total = prop + processing;
        ck.over(Family::Eq11, Provenance { chain: Some(chain.id), ..Default::default() }, total, chain.latency_budget_ms, "latency ms");
        latency.push(LatencySlack {
            chain: chain.id,
            latency_ms: total,
            budget_ms: chain.latency_budget_ms,
            slack_ms: chain.latency_budget_ms - total,
        });
    }
    let mut links = Vec::new();
    for link in topo.arcs() {
        let load = match problem.options.capacity_mode {
            CapacityMode::PerArc => arc_load[link.id.0],
            CapacityMode::SharedFiber => arc_load[link.id.0] + arc_load[topo.reverse_arc(link.id).0],
        };
        let at = Provenance { arc: Some(link.id), node: Some(link.from), ..Default::default() };
        let shared_twin = problem.options.capacity_mode == CapacityMode::SharedFiber && link.id.0 % 2 == 1;
        if !shared_twin {
            ck.over(Family::Eq10, at, load, link.capacity_gbps, "Gbps");
        }
        links.push(LinkUsage { arc: link.id, from: link.from, to: link.to, load_gbps: load, capacity_gbps: link.capacity_gbps });
    }

    let reported = solution.objective;
    let scale = objective.abs().max(reported.abs()).max(1.0);
    if (reported - objective).abs() > TOLERANCE * scale {
        ck.flag(
            Family::Objective,
            Provenance::default(),
            (reported - objective).abs(),
            format!("reported {reported:.9}, recomputed {objective:.9}"),
        );
    }

    VerificationReport {
        violations: ck.out,
        reported_objective: reported,
        recomputed_objective: objective,
        latency,
        cores,
        links,
    }
}

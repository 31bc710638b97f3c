//! Exact search for tiny instances.
//!
//! Placement is enumerated instance group by instance group (a group is a
//! `(function, instance)` pair of one chain, so co-located visits move
//! together) with pruning on replica counts, cores, latency and a hop-count
//! cost bound. Every complete placement is then routed exactly: each segment
//! picks a simple path, searched best-first with capacity, latency and cost
//! pruning. Cycles never help because every segment carries positive load.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use crate::error::{IlpError, SolveError};
use crate::model::{ArcId, NodeId, Topology, VnfId};
use crate::problem::{CapacityMode, PlacementProblem};

use super::{PlacementSolution, SolveStatus, SolverMeta};

const EPS: f64 = 1e-9;

/// Size guard; the oracle refuses anything larger with [`SolveError::TooLarge`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_nodes: usize,
    pub max_chains: usize,
    /// Search nodes visited before giving up.
    pub max_expansions: u64,
    /// Simple paths kept per node pair.
    pub max_paths: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_nodes: 6, max_chains: 3, max_expansions: 50_000_000, max_paths: 20_000 }
    }
}

pub fn solve_exhaustive(problem: &PlacementProblem) -> Result<PlacementSolution, SolveError> {
    solve_exhaustive_with(problem, &OracleLimits::default())
}

pub fn solve_exhaustive_with(problem: &PlacementProblem, limits: &OracleLimits) -> Result<PlacementSolution, SolveError> {
    let started = Instant::now();
    let n = problem.topology.nodes().len();
    if n > limits.max_nodes {
        return Err(SolveError::TooLarge(format!("{n} nodes, oracle limit {}", limits.max_nodes)));
    }
    if problem.chains.len() > limits.max_chains {
        return Err(SolveError::TooLarge(format!(
            "{} chains, oracle limit {}",
            problem.chains.len(),
            limits.max_chains
        )));
    }
    for f in problem.used_functions() {
        let r = problem.vnfs.max_replicas(f);
        if r < 1 {
            return Err(IlpError::NoReplicas(f, r).into());
        }
    }
    for chain in &problem.chains {
        for node in chain.endpoints() {
            if !problem.topology.contains(node) {
                return Err(IlpError::MissingEndpoint { chain: chain.id, node }.into());
            }
        }
    }

    let mut search = Search::new(problem, limits);
    search.run()?;
    let wall = started.elapsed().as_secs_f64();
    Ok(match search.best.take() {
        Some(best) => {
            let meta = SolverMeta { engine: "exhaustive".into(), status: SolveStatus::Optimal, wall_time_s: wall, gap: Some(0.0) };
            PlacementSolution::assemble(problem, &best.nodes, best.routes, meta)
        }
        None => PlacementSolution::without_solution("exhaustive", SolveStatus::Infeasible, wall),
    })
}

struct Group {
    chain: usize,
    function: VnfId,
    /// 1-based chain positions visiting this instance.
    positions: Vec<usize>,
    cores: f64,
}

/// A chain segment with both endpoints known.
#[derive(Clone, Copy)]
struct Segment {
    chain: usize,
    index: usize,
    from: NodeId,
    to: NodeId,
    load: f64,
}

struct Incumbent {
    cost: f64,
    nodes: Vec<Vec<NodeId>>,
    routes: Vec<Vec<Vec<ArcId>>>,
}

struct Search<'a> {
    problem: &'a PlacementProblem,
    limits: &'a OracleLimits,
    topo: &'a Topology,
    nfv: Vec<NodeId>,
    groups: Vec<Group>,
    /// Segments fully determined once group `g` is placed; index `groups.len()`
    /// holds segments fixed from the start (both ends pseudo).
    settles: Vec<Vec<(usize, usize)>>,
    /// Node per chain position, `None` while open.
    nodes: Vec<Vec<Option<NodeId>>>,
    hosted: HashMap<(VnfId, NodeId), u32>,
    replicas: BTreeMap<VnfId, u32>,
    node_use: HashMap<NodeId, u32>,
    cores: HashMap<NodeId, f64>,
    chain_latency_lb: Vec<f64>,
    processing: Vec<f64>,
    hops: HashMap<(NodeId, NodeId), u32>,
    min_latency: HashMap<(NodeId, NodeId), f64>,
    paths: HashMap<(NodeId, NodeId), Vec<Path>>,
    best: Option<Incumbent>,
    expansions: u64,
}

#[derive(Clone)]
struct Path {
    arcs: Vec<ArcId>,
    latency: f64,
}

impl<'a> Search<'a> {
    fn new(problem: &'a PlacementProblem, limits: &'a OracleLimits) -> Self {
        let topo = &problem.topology;
        let mut groups = Vec::new();
        let mut nodes = Vec::new();
        let mut processing = Vec::new();
        for (k, chain) in problem.chains.iter().enumerate() {
            nodes.push((1..=chain.len()).map(|i| chain.home(i)).collect::<Vec<_>>());
            processing.push(
                (1..=chain.len())
                    .filter(|&i| !chain.position(i).function.is_pseudo())
                    .map(|i| chain.inbound_load(i) * problem.vnfs.spec(chain.position(i).function).proc_latency_ms_per_gbps)
                    .sum::<f64>(),
            );
            for g in chain.instance_groups() {
                let positions: Vec<usize> = (1..=chain.len()).filter(|&i| chain.position(i) == g).collect();
                let per_gbps = problem.vnfs.spec(g.function).cores_per_gbps;
                let cores = positions.iter().map(|&i| chain.inbound_load(i) * per_gbps).sum();
                groups.push(Group { chain: k, function: g.function, positions, cores });
            }
        }

        // which group closes each segment
        let mut settles = vec![Vec::new(); groups.len() + 1];
        for (k, chain) in problem.chains.iter().enumerate() {
            let group_of = |i: usize| groups.iter().position(|g| g.chain == k && g.positions.contains(&i));
            for i in chain.segments() {
                let last = match (group_of(i), group_of(i + 1)) {
                    (None, None) => groups.len(),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (Some(a), Some(b)) => a.max(b),
                };
                settles[last].push((k, i));
            }
        }

        let mut hops = HashMap::new();
        let mut min_latency = HashMap::new();
        let ids: Vec<NodeId> = topo.node_ids().collect();
        let matrix = topo.hop_matrix();
        for (x, &a) in ids.iter().enumerate() {
            for (y, &b) in ids.iter().enumerate() {
                hops.insert((a, b), matrix[x][y]);
                min_latency.insert((a, b), topo.shortest_path_latency(a, b).unwrap_or(f64::INFINITY));
            }
        }

        Search {
            problem,
            limits,
            topo,
            nfv: topo.nfv_nodes().collect(),
            groups,
            settles,
            nodes,
            hosted: HashMap::new(),
            replicas: BTreeMap::new(),
            node_use: HashMap::new(),
            cores: HashMap::new(),
            chain_latency_lb: processing.clone(),
            processing,
            hops,
            min_latency,
            paths: HashMap::new(),
            best: None,
            expansions: 0,
        }
    }

    fn tick(&mut self) -> Result<(), SolveError> {
        self.expansions += 1;
        if self.expansions > self.limits.max_expansions {
            return Err(SolveError::TooLarge(format!("search exceeded {} expansions", self.limits.max_expansions)));
        }
        Ok(())
    }

    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.cost)
    }

    fn segment(&self, k: usize, i: usize) -> Segment {
        let chain = &self.problem.chains[k];
        Segment {
            chain: k,
            index: i,
            from: self.nodes[k][i - 1].expect("settled segment"),
            to: self.nodes[k][i].expect("settled segment"),
            load: chain.segment_load(i),
        }
    }

    /// Adds the settled segments' hop cost and latency floor; returns the
    /// added cost, or `None` if some chain's latency floor breaks its budget.
    fn settle(&mut self, slot: usize) -> Option<f64> {
        let mut cost = 0.0;
        let mut ok = true;
        for &(k, i) in &self.settles[slot] {
            let s = self.segment(k, i);
            cost += s.load * self.hops[&(s.from, s.to)] as f64;
            self.chain_latency_lb[k] += self.min_latency[&(s.from, s.to)];
            if self.chain_latency_lb[k] > self.problem.chains[k].latency_budget_ms + EPS {
                ok = false;
            }
        }
        ok.then_some(cost)
    }

    fn unsettle(&mut self, slot: usize) {
        for &(k, i) in &self.settles[slot] {
            let s = self.segment(k, i);
            self.chain_latency_lb[k] -= self.min_latency[&(s.from, s.to)];
        }
    }

    fn run(&mut self) -> Result<(), SolveError> {
        let slot = self.groups.len();
        if let Some(cost) = self.settle(slot) {
            self.place_from(0, cost)?;
        }
        self.unsettle(slot);
        Ok(())
    }

    fn place_from(&mut self, g: usize, cost: f64) -> Result<(), SolveError> {
        self.tick()?;
        if cost >= self.bound() - EPS {
            return Ok(());
        }
        if g == self.groups.len() {
            return self.route_leaf();
        }
        let (k, f, group_cores) = (self.groups[g].chain, self.groups[g].function, self.groups[g].cores);
        for vi in 0..self.nfv.len() {
            let v = self.nfv[vi];
            let new_host = !self.hosted.contains_key(&(f, v));
            if new_host && self.replicas.get(&f).copied().unwrap_or(0) >= self.problem.vnfs.max_replicas(f) {
                continue;
            }
            let new_node = !self.node_use.contains_key(&v);
            if new_node {
                if let Some(cap) = self.problem.options.max_nfv_nodes {
                    if self.node_use.len() as u32 >= cap {
                        continue;
                    }
                }
            }
            let capacity = self.topo.node(v).map_or(0, |n| n.cores) as f64;
            let used = self.cores.get(&v).copied().unwrap_or(0.0);
            if used + group_cores > capacity + EPS {
                continue;
            }

            // apply
            for &i in &self.groups[g].positions {
                self.nodes[k][i - 1] = Some(v);
            }
            *self.hosted.entry((f, v)).or_insert(0) += 1;
            if new_host {
                *self.replicas.entry(f).or_insert(0) += 1;
            }
            *self.node_use.entry(v).or_insert(0) += 1;
            *self.cores.entry(v).or_insert(0.0) += group_cores;

            if let Some(c) = self.settle(g) {
                self.place_from(g + 1, cost + c)?;
            }
            self.unsettle(g);

            // undo
            *self.cores.get_mut(&v).unwrap() -= group_cores;
            let u = self.node_use.get_mut(&v).unwrap();
            *u -= 1;
            if *u == 0 {
                self.node_use.remove(&v);
            }
            let h = self.hosted.get_mut(&(f, v)).unwrap();
            *h -= 1;
            if *h == 0 {
                self.hosted.remove(&(f, v));
                *self.replicas.get_mut(&f).unwrap() -= 1;
            }
            for &i in &self.groups[g].positions {
                self.nodes[k][i - 1] = None;
            }
        }
        Ok(())
    }

    fn simple_paths(&mut self, a: NodeId, b: NodeId) -> Result<Vec<Path>, SolveError> {
        if let Some(p) = self.paths.get(&(a, b)) {
            return Ok(p.clone());
        }
        let mut out = Vec::new();
        if a == b {
            out.push(Path { arcs: Vec::new(), latency: 0.0 });
        } else {
            let mut stack = Vec::new();
            let mut visited = vec![a];
            collect_paths(self.topo, a, b, &mut visited, &mut stack, &mut out, self.limits.max_paths)?;
            out.sort_by(|x, y| {
                x.arcs.len().cmp(&y.arcs.len()).then(x.latency.total_cmp(&y.latency)).then_with(|| x.arcs.cmp(&y.arcs))
            });
        }
        self.paths.insert((a, b), out.clone());
        Ok(out)
    }

    fn route_leaf(&mut self) -> Result<(), SolveError> {
        let mut segments: Vec<Segment> = Vec::new();
        for (k, chain) in self.problem.chains.iter().enumerate() {
            for i in chain.segments() {
                segments.push(self.segment(k, i));
            }
        }
        // heavy segments first so capacity conflicts surface early
        segments.sort_by(|x, y| y.load.total_cmp(&x.load).then(x.chain.cmp(&y.chain)).then(x.index.cmp(&y.index)));
        let mut options = Vec::with_capacity(segments.len());
        for s in &segments {
            options.push(self.simple_paths(s.from, s.to)?);
        }
        if options.iter().any(|o| o.is_empty()) {
            return Ok(());
        }
        // suffix bounds
        let m = segments.len();
        let mut rest_cost = vec![0.0; m + 1];
        for t in (0..m).rev() {
            rest_cost[t] = rest_cost[t + 1] + segments[t].load * options[t][0].arcs.len() as f64;
        }
        let mut rest_latency = vec![0.0; self.problem.chains.len()];
        for (t, s) in segments.iter().enumerate() {
            rest_latency[s.chain] += options[t].iter().map(|p| p.latency).fold(f64::INFINITY, f64::min);
        }
        let mut router = Router {
            segments: &segments,
            options: &options,
            rest_cost: &rest_cost,
            rest_latency,
            latency: self.processing.clone(),
            budgets: self.problem.chains.iter().map(|c| c.latency_budget_ms).collect(),
            arc_load: vec![0.0; self.topo.arcs().len()],
            shared: self.problem.options.capacity_mode == CapacityMode::SharedFiber,
            topo: self.topo,
            choice: vec![0; m],
            best_cost: self.bound(),
            best_choice: None,
            expansions: &mut self.expansions,
            max_expansions: self.limits.max_expansions,
        };
        router.descend(0, 0.0)?;
        if let (Some(choice), cost) = (router.best_choice.take(), router.best_cost) {
            let mut routes: Vec<Vec<Vec<ArcId>>> =
                self.problem.chains.iter().map(|c| vec![Vec::new(); c.len() - 1]).collect();
            for (t, s) in segments.iter().enumerate() {
                routes[s.chain][s.index - 1] = options[t][choice[t]].arcs.clone();
            }
            let nodes = self.nodes.iter().map(|c| c.iter().map(|v| v.expect("complete placement")).collect()).collect();
            self.best = Some(Incumbent { cost, nodes, routes });
        }
        Ok(())
    }
}

fn collect_paths(
    topo: &Topology,
    at: NodeId,
    target: NodeId,
    visited: &mut Vec<NodeId>,
    stack: &mut Vec<ArcId>,
    out: &mut Vec<Path>,
    max_paths: usize,
) -> Result<(), SolveError> {
    for &arc in topo.out_arcs(at) {
        let next = topo.arc(arc).to;
        if visited.contains(&next) {
            continue;
        }
        stack.push(arc);
        if next == target {
            if out.len() >= max_paths {
                return Err(SolveError::TooLarge(format!("more than {max_paths} simple paths")));
            }
            let latency = stack.iter().map(|&a| topo.arc(a).prop_latency_ms).sum();
            out.push(Path { arcs: stack.clone(), latency });
        } else {
            visited.push(next);
            collect_paths(topo, next, target, visited, stack, out, max_paths)?;
            visited.pop();
        }
        stack.pop();
    }
    Ok(())
}

struct Router<'s> {
    segments: &'s [Segment],
    options: &'s [Vec<Path>],
    rest_cost: &'s [f64],
    /// Per chain: cheapest latency still to come.
    rest_latency: Vec<f64>,
    latency: Vec<f64>,
    budgets: Vec<f64>,
    arc_load: Vec<f64>,
    shared: bool,
    topo: &'s Topology,
    choice: Vec<usize>,
    best_cost: f64,
    best_choice: Option<Vec<usize>>,
    expansions: &'s mut u64,
    max_expansions: u64,
}

impl Router<'_> {
    fn fits(&self, path: &Path, load: f64) -> bool {
        path.arcs.iter().all(|&a| {
            let mut used = self.arc_load[a.0] + load;
            if self.shared {
                used += self.arc_load[self.topo.reverse_arc(a).0];
            }
            used <= self.topo.arc(a).capacity_gbps + EPS
        })
    }

    fn descend(&mut self, t: usize, cost: f64) -> Result<(), SolveError> {
        *self.expansions += 1;
        if *self.expansions > self.max_expansions {
            return Err(SolveError::TooLarge(format!("search exceeded {} expansions", self.max_expansions)));
        }
        if cost + self.rest_cost[t] >= self.best_cost - EPS {
            return Ok(());
        }
        if t == self.segments.len() {
            self.best_cost = cost;
            self.best_choice = Some(self.choice.clone());
            return Ok(());
        }
        let s = self.segments[t];
        let floor = self.options[t].iter().map(|p| p.latency).fold(f64::INFINITY, f64::min);
        self.rest_latency[s.chain] -= floor;
        for (p, path) in self.options[t].iter().enumerate() {
            let added = s.load * path.arcs.len() as f64;
            if cost + added + self.rest_cost[t + 1] >= self.best_cost - EPS {
                // options are sorted by hop count, so the rest are no better
                break;
            }
            if self.latency[s.chain] + path.latency + self.rest_latency[s.chain] > self.budgets[s.chain] + EPS {
                continue;
            }
            if !self.fits(path, s.load) {
                continue;
            }
            for &a in &path.arcs {
                self.arc_load[a.0] += s.load;
            }
            self.latency[s.chain] += path.latency;
            self.choice[t] = p;
            self.descend(t + 1, cost + added)?;
            self.latency[s.chain] -= path.latency;
            for &a in &path.arcs {
                self.arc_load[a.0] -= s.load;
            }
        }
        self.rest_latency[s.chain] += floor;
        Ok(())
    }
}

//! Solver-free upper bound.
//!
//! Each function gets up to `R_f` host nodes, ranked by the demand of chains
//! whose fewest-hop source→destination path crosses the node. Instance groups
//! then pick the cheapest host in hop terms, and segments are routed on
//! fewest-hop paths with enough residual capacity, heaviest first. The result
//! is returned only if the verifier accepts it.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use crate::model::{ArcId, NodeId, VnfId};
use crate::problem::{CapacityMode, PlacementProblem};
use crate::verify::check_solution;

use super::{PlacementSolution, SolveStatus, SolverMeta};

pub fn solve_greedy(problem: &PlacementProblem) -> PlacementSolution {
    let started = Instant::now();
    let attempt = place_and_route(problem);
    let wall = started.elapsed().as_secs_f64();
    let Some((nodes, routes)) = attempt else {
        return PlacementSolution::without_solution("greedy", SolveStatus::NotFound, wall);
    };
    let meta = SolverMeta { engine: "greedy".into(), status: SolveStatus::Feasible, wall_time_s: wall, gap: None };
    let solution = PlacementSolution::assemble(problem, &nodes, routes, meta);
    if check_solution(problem, &solution).passed() {
        solution
    } else {
        PlacementSolution::without_solution("greedy", SolveStatus::NotFound, wall)
    }
}

type Plan = (Vec<Vec<NodeId>>, Vec<Vec<Vec<ArcId>>>);

fn place_and_route(problem: &PlacementProblem) -> Option<Plan> {
    let topo = &problem.topology;
    let ids: Vec<NodeId> = topo.node_ids().collect();
    let matrix = topo.hop_matrix();
    let mut hops: HashMap<(NodeId, NodeId), f64> = HashMap::new();
    for (x, &a) in ids.iter().enumerate() {
        for (y, &b) in ids.iter().enumerate() {
            hops.insert((a, b), matrix[x][y] as f64);
        }
    }
    let nfv: Vec<NodeId> = topo.nfv_nodes().collect();

    // host ranking
    let mut score: BTreeMap<VnfId, HashMap<NodeId, f64>> = BTreeMap::new();
    for chain in &problem.chains {
        let path = topo.min_hop_path(chain.source, chain.dest).ok()?;
        let mut on_path = vec![chain.source];
        on_path.extend(path.iter().map(|&a| topo.arc(a).to));
        for g in chain.instance_groups() {
            let entry = score.entry(g.function).or_default();
            for v in &on_path {
                *entry.entry(*v).or_insert(0.0) += chain.demand_gbps;
            }
        }
    }
    let mut hosts: BTreeMap<VnfId, Vec<NodeId>> = BTreeMap::new();
    for f in problem.used_functions() {
        let s = score.get(&f);
        let mut ranked = nfv.clone();
        ranked.sort_by(|a, b| {
            let (sa, sb) = (s.and_then(|m| m.get(a)).unwrap_or(&0.0), s.and_then(|m| m.get(b)).unwrap_or(&0.0));
            sb.total_cmp(sa).then(a.cmp(b))
        });
        ranked.truncate(problem.vnfs.max_replicas(f) as usize);
        hosts.insert(f, ranked);
    }

    // placement
    let mut cores_left: HashMap<NodeId, f64> = topo.nodes().iter().map(|n| (n.id, n.cores as f64)).collect();
    let mut nodes = Vec::with_capacity(problem.chains.len());
    for chain in &problem.chains {
        let mut at: Vec<Option<NodeId>> = (1..=chain.len()).map(|i| chain.home(i)).collect();
        for g in chain.instance_groups() {
            let positions: Vec<usize> = (1..=chain.len()).filter(|&i| chain.position(i) == g).collect();
            let per_gbps = problem.vnfs.spec(g.function).cores_per_gbps;
            let need: f64 = positions.iter().map(|&i| chain.inbound_load(i) * per_gbps).sum();
            let cost = |v: NodeId| -> f64 {
                positions
                    .iter()
                    .map(|&i| {
                        let before = if i > 1 { at[i - 2].unwrap_or(chain.source) } else { v };
                        let after = if i < chain.len() { at[i].unwrap_or(chain.dest) } else { v };
                        chain.inbound_load(i) * hops[&(before, v)] + chain.segment_load(i.min(chain.len() - 1)) * hops[&(v, after)]
                    })
                    .sum()
            };
            let choice = hosts[&g.function]
                .iter()
                .copied()
                .filter(|v| cores_left[v] + 1e-9 >= need)
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))?;
            *cores_left.get_mut(&choice).unwrap() -= need;
            for &i in &positions {
                at[i - 1] = Some(choice);
            }
        }
        nodes.push(at.into_iter().collect::<Option<Vec<_>>>()?);
    }

    // routing
    let mut order: Vec<(usize, usize)> =
        problem.chains.iter().enumerate().flat_map(|(k, c)| c.segments().map(move |i| (k, i))).collect();
    order.sort_by(|&(ka, ia), &(kb, ib)| {
        let (la, lb) = (problem.chains[ka].segment_load(ia), problem.chains[kb].segment_load(ib));
        lb.total_cmp(&la).then((ka, ia).cmp(&(kb, ib)))
    });
    let shared = problem.options.capacity_mode == CapacityMode::SharedFiber;
    let mut used = vec![0.0; topo.arcs().len()];
    let mut routes: Vec<Vec<Vec<ArcId>>> = problem.chains.iter().map(|c| vec![Vec::new(); c.len() - 1]).collect();
    for (k, i) in order {
        let chain = &problem.chains[k];
        let load = chain.segment_load(i);
        let (a, b) = (nodes[k][i - 1], nodes[k][i]);
        let path = topo
            .shortest_path_by(a, b, |l| {
                let mut u = used[l.id.0] + load;
                if shared {
                    u += used[topo.reverse_arc(l.id).0];
                }
                if u <= l.capacity_gbps + 1e-9 {
                    1.0
                } else {
                    f64::INFINITY
                }
            })
            .ok()?;
        for &arc in &path {
            used[arc.0] += load;
        }
        routes[k][i - 1] = path;
    }
    Some((nodes, routes))
}

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vepc_core::chains::{ChainPosition, ServiceChain};
use vepc_core::model::{LinkDoc, Node, NodeId, NodeKind, Topology, TopologyDoc, VnfCatalog, VnfId};
use vepc_core::{CapacityMode, ModelOptions, PlacementProblem};

pub fn node(id: u32, nfv: bool, cores: u32) -> Node {
    let kind = if nfv { NodeKind::Switch } else { NodeKind::Tap };
    Node { id: NodeId(id), kind, nfv_capable: nfv, cores: if nfv { cores } else { 0 } }
}

pub fn link(id: u32, a: u32, b: u32, capacity: f64, km: f64) -> LinkDoc {
    LinkDoc { id, a: NodeId(a), b: NodeId(b), capacity_gbps: capacity, length_km: km, prop_latency_ms: None }
}

pub fn topology(nodes: Vec<Node>, links: Vec<LinkDoc>) -> Topology {
    Topology::from_document(TopologyDoc { nodes, links }).expect("valid test topology")
}

pub fn pos(f: VnfId, instance: u32) -> ChainPosition {
    ChainPosition { function: f, instance }
}

/// SRC, the given functions (instance 1), DST.
pub fn chain(id: u32, src: u32, dst: u32, functions: &[VnfId], beta: f64, demand: f64, budget: f64) -> ServiceChain {
    let mut positions = vec![pos(VnfId::Src, 1)];
    positions.extend(functions.iter().map(|&f| pos(f, 1)));
    positions.push(pos(VnfId::Dst, 1));
    let betas = vec![beta; positions.len() - 1];
    ServiceChain::new(id, NodeId(src), NodeId(dst), positions, betas, demand, budget).expect("valid test chain")
}

/// A random instance with at most 6 nodes and 3 chains. Capacities, budgets,
/// cores and replica limits are drawn so that every constraint family binds
/// on some instances and some instances are infeasible.
pub fn random_tiny(seed: u64) -> PlacementProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: u32 = rng.gen_range(4..=6);
    let cores = [30, 60, 100];
    let mut nodes: Vec<Node> = (1..=n).map(|i| node(i, rng.gen_bool(0.7), *cores.choose(&mut rng).unwrap())).collect();
    if !nodes.iter().any(|x| x.nfv_capable) {
        nodes[1] = node(2, true, 100);
    }
    let caps = [10.0, 20.0, 60.0];
    let kms = [50.0, 50.0, 100.0];
    let mut links = Vec::new();
    for i in 2..=n {
        let parent = rng.gen_range(1..i);
        links.push(link(links.len() as u32 + 1, parent, i, *caps.choose(&mut rng).unwrap(), *kms.choose(&mut rng).unwrap()));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        let dup = links.iter().any(|l| (l.a.0, l.b.0) == (a, b) || (l.a.0, l.b.0) == (b, a));
        if a != b && !dup {
            links.push(link(links.len() as u32 + 1, a, b, *caps.choose(&mut rng).unwrap(), *kms.choose(&mut rng).unwrap()));
        }
    }
    let topo = topology(nodes, links);

    let mut vnfs = VnfCatalog::default();
    for f in VnfId::REAL {
        vnfs.set_replicas(f, rng.gen_range(1..=2));
    }
    let pool = [VnfId::Mme, VnfId::Sgw, VnfId::Pgw, VnfId::Hss];
    let chains = (1..=rng.gen_range(1..=3))
        .map(|id| {
            let mut positions = vec![pos(VnfId::Src, 1)];
            let len = rng.gen_range(1..=3);
            let mut seen: Vec<VnfId> = Vec::new();
            for _ in 0..len {
                let f = *pool.choose(&mut rng).unwrap();
                positions.push(pos(f, 1));
                seen.push(f);
            }
            // revisit an earlier function now and then (stateful co-location)
            if rng.gen_bool(0.4) {
                positions.push(pos(seen[0], 1));
            }
            let loop_back = rng.gen_bool(0.3);
            positions.push(pos(if loop_back { VnfId::Src } else { VnfId::Dst }, 1));
            let beta = if rng.gen_bool(0.3) { 0.05 } else { 1.0 };
            let betas = vec![beta; positions.len() - 1];
            let demand = rng.gen_range(1..=12) as f64;
            let src = rng.gen_range(1..=n);
            let dst = (src + rng.gen_range(1..n) - 1) % n + 1;
            let processing: f64 = (1..positions.len() - 1).map(|_| beta * demand * 0.132).sum();
            let slack = [0.6, 1.0, 100.0, 100.0][rng.gen_range(0..4)];
            ServiceChain::new(id, NodeId(src), NodeId(dst), positions, betas, demand, processing + slack).unwrap()
        })
        .collect();
    let mut problem = PlacementProblem::new(topo, chains, vnfs);
    problem.options = ModelOptions {
        capacity_mode: if rng.gen_bool(0.25) { CapacityMode::SharedFiber } else { CapacityMode::PerArc },
        max_nfv_nodes: if rng.gen_bool(0.2) { Some(rng.gen_range(1..=2)) } else { None },
        link_rows: rng.gen_bool(0.8),
    };
    problem
}

/// HiGHS or CBC when one is installed.
pub fn external_solver() -> Option<vepc_core::solve::ExternalSolver> {
    vepc_core::solve::ExternalSolver::detect(120.0).ok()
}

/// Copy of `problem` with every link capacity, node core budget and latency
/// budget raised far above any load.
pub fn unconstrained(problem: &PlacementProblem) -> PlacementProblem {
    let mut doc = problem.topology.to_document();
    for n in &mut doc.nodes {
        if n.nfv_capable {
            n.cores = 1_000_000;
        }
    }
    for l in &mut doc.links {
        l.capacity_gbps = 1e6;
    }
    let chains = problem
        .chains
        .iter()
        .map(|c| {
            ServiceChain::new(c.id, c.source, c.dest, c.positions.clone(), c.betas[1..].to_vec(), c.demand_gbps, 1e6)
                .unwrap()
        })
        .collect();
    let mut out = PlacementProblem::new(Topology::from_document(doc).unwrap(), chains, problem.vnfs.clone());
    out.options = problem.options.clone();
    out
}

/// Triangle 1-2-3 with the attach upload chain from TAP 1 to gateway 2.
/// Node 1 has room for the gateway functions plus two control positions, so
/// the three MME visits cannot all sit there. With `relabel` the MME visits
/// get distinct instance labels, which removes the co-location coupling.
pub fn attach_guard(relabel: bool) -> PlacementProblem {
    use vepc_core::model::NasProcedure;
    let mut t1 = node(1, true, 46);
    t1.kind = NodeKind::Tap;
    let mut gw = node(2, true, 10);
    gw.kind = NodeKind::AppGateway;
    let topo = topology(
        vec![t1, gw, node(3, true, 10)],
        vec![link(1, 1, 2, 60.0, 50.0), link(2, 2, 3, 60.0, 50.0), link(3, 1, 3, 60.0, 50.0)],
    );
    let csc = vepc_core::TemplateSet::default().build_csc(Some(NasProcedure::Attach)).unwrap();
    let mut positions = csc.clone();
    positions.extend([pos(VnfId::Sgw, 1), pos(VnfId::Pgw, 1), pos(VnfId::Dst, 1)]);
    if relabel {
        let mut k = 0;
        for p in positions.iter_mut().filter(|p| p.function == VnfId::Mme) {
            k += 1;
            p.instance = k;
        }
    }
    let mut betas = vec![0.05; csc.len() - 1];
    betas.extend([1.0; 3]);
    let chain = ServiceChain::new(1, NodeId(1), NodeId(2), positions, betas, 10.0, 600.0).unwrap();
    let mut vnfs = VnfCatalog::default();
    vnfs.set_all_replicas(3);
    PlacementProblem::new(topo, vec![chain], vnfs)
}

/// The full model minus the co-location rows.
pub fn model_without_colocation(problem: &PlacementProblem) -> vepc_core::ilp::MilpModel {
    use vepc_core::ilp::*;
    let mut model = MilpModel::new();
    create_placement_vars(&mut model, problem);
    create_route_vars(&mut model, problem);
    model.objective = build_objective(&mut model, problem);
    add_endpoint_constraints(&mut model, problem).unwrap();
    add_unique_placement(&mut model, problem);
    add_flow_conservation(&mut model, problem);
    add_replica_tracking(&mut model, problem).unwrap();
    add_core_capacity(&mut model, problem);
    add_link_capacity(&mut model, problem);
    add_latency(&mut model, problem);
    model
}

/// Nodes of every position of `chain` holding function `f`.
pub fn nodes_of(solution: &vepc_core::solve::PlacementSolution, problem: &PlacementProblem, chain: u32, f: VnfId) -> Vec<NodeId> {
    let c = problem.chain(chain).unwrap();
    (1..=c.len())
        .filter(|&i| c.position(i).function == f)
        .map(|i| solution.node_of(chain, i).unwrap())
        .collect()
}

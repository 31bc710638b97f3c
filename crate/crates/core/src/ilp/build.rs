use std::collections::BTreeMap;

use super::{Family, LinearExpr, MilpModel, Provenance, Sense, VarId, VarRef};
use crate::chains::ServiceChain;
use crate::error::IlpError;
use crate::model::{NodeId, VnfId};
use crate::problem::{CapacityMode, PlacementProblem};

fn place_ref(chain: &ServiceChain, i: usize, node: NodeId) -> VarRef {
    VarRef::Place { chain: chain.id, position: i, instance: chain.position(i).instance, node }
}

fn place(model: &MilpModel, chain: &ServiceChain, i: usize, node: NodeId) -> Option<VarId> {
    model.lookup(&place_ref(chain, i, node))
}

fn route(model: &mut MilpModel, chain: &ServiceChain, i: usize, arc: crate::model::ArcId) -> VarId {
    model.var(VarRef::Route { chain: chain.id, segment: i, arc })
}

fn prov_chain(chain: &ServiceChain) -> Provenance {
    Provenance { chain: Some(chain.id), ..Default::default() }
}

/// Pseudo-function positions get a single variable at their home node; real
/// positions get one per node of V^NFV ∪ SD_c.
pub fn create_placement_vars(model: &mut MilpModel, problem: &PlacementProblem) {
    for chain in &problem.chains {
        let candidates = problem.candidate_nodes(chain);
        for i in 1..=chain.len() {
            match chain.home(i) {
                Some(home) => {
                    model.var(place_ref(chain, i, home));
                }
                None => {
                    for &v in &candidates {
                        model.var(place_ref(chain, i, v));
                    }
                }
            }
        }
    }
}

pub fn create_route_vars(model: &mut MilpModel, problem: &PlacementProblem) {
    for chain in &problem.chains {
        for i in chain.segments() {
            for arc in problem.topology.arcs() {
                route(model, chain, i, arc.id);
            }
        }
    }
}

/// Bandwidth consumed over all links: Σ_c Σ_ℓ Σ_i D^c β_i^c y(c, i, ℓ).
pub fn build_objective(model: &mut MilpModel, problem: &PlacementProblem) -> LinearExpr {
    let mut terms = Vec::new();
    for chain in &problem.chains {
        for i in chain.segments() {
            let load = chain.segment_load(i);
            for arc in problem.topology.arcs() {
                terms.push((load, route(model, chain, i, arc.id)));
            }
        }
    }
    LinearExpr { terms }
}

pub fn add_endpoint_constraints(model: &mut MilpModel, problem: &PlacementProblem) -> Result<(), IlpError> {
    let topo = &problem.topology;
    for chain in &problem.chains {
        for node in chain.endpoints() {
            if !topo.contains(node) {
                return Err(IlpError::MissingEndpoint { chain: chain.id, node });
            }
        }
        for i in 1..=chain.len() {
            let prov = Provenance { position: Some(i), function: Some(chain.position(i).function), ..prov_chain(chain) };
            match chain.home(i) {
                Some(home) => {
                    let x = model.var(place_ref(chain, i, home));
                    model.add_constraint([(1.0, x)], Sense::Eq, 1.0, Family::Eq2, Provenance { node: Some(home), ..prov });
                }
                None => {
                    for v in chain.endpoints() {
                        if topo.is_nfv(v) {
                            continue;
                        }
                        let x = model.var(place_ref(chain, i, v));
                        model.add_constraint([(1.0, x)], Sense::Eq, 0.0, Family::Eq3, Provenance { node: Some(v), ..prov });
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn add_unique_placement(model: &mut MilpModel, problem: &PlacementProblem) {
    let nfv: Vec<NodeId> = problem.topology.nfv_nodes().collect();
    for chain in &problem.chains {
        for i in 1..=chain.len() {
            if chain.home(i).is_some() {
                continue;
            }
            let terms: Vec<_> = nfv.iter().map(|&v| (1.0, model.var(place_ref(chain, i, v)))).collect();
            let prov = Provenance { position: Some(i), function: Some(chain.position(i).function), ..prov_chain(chain) };
            model.add_constraint(terms, Sense::Eq, 1.0, Family::Eq4, prov);
        }
    }
}

/// Out-flow minus in-flow of each segment equals "segment starts here" minus
/// "segment ends here" at candidate nodes, and zero elsewhere.
pub fn add_flow_conservation(model: &mut MilpModel, problem: &PlacementProblem) {
    let topo = &problem.topology;
    for chain in &problem.chains {
        let candidates = problem.candidate_nodes(chain);
        for i in chain.segments() {
            for node in topo.nodes() {
                let v = node.id;
                let mut terms: Vec<(f64, VarId)> = Vec::new();
                for &arc in topo.out_arcs(v) {
                    terms.push((1.0, route(model, chain, i, arc)));
                }
                for &arc in topo.in_arcs(v) {
                    terms.push((-1.0, route(model, chain, i, arc)));
                }
                let prov = Provenance { position: Some(i), node: Some(v), ..prov_chain(chain) };
                if candidates.binary_search(&v).is_ok() {
                    if let Some(x) = place(model, chain, i, v) {
                        terms.push((-1.0, x));
                    }
                    if let Some(x) = place(model, chain, i + 1, v) {
                        terms.push((1.0, x));
                    }
                    model.add_constraint(terms, Sense::Eq, 0.0, Family::Eq5, prov);
                } else {
                    model.add_constraint(terms, Sense::Eq, 0.0, Family::Eq6, prov);
                }
            }
        }
    }
}

/// Positions repeating a (function, instance) pair follow its first occurrence.
pub fn add_colocation_coupling(model: &mut MilpModel, problem: &PlacementProblem) {
    for chain in &problem.chains {
        let candidates = problem.candidate_nodes(chain);
        let mut first: BTreeMap<(VnfId, u32), usize> = BTreeMap::new();
        for i in 1..=chain.len() {
            let p = chain.position(i);
            if p.function.is_pseudo() {
                continue;
            }
            let Some(&anchor) = first.get(&(p.function, p.instance)) else {
                first.insert((p.function, p.instance), i);
                continue;
            };
            for &v in &candidates {
                let a = model.var(place_ref(chain, anchor, v));
                let b = model.var(place_ref(chain, i, v));
                let prov = Provenance { position: Some(i), node: Some(v), function: Some(p.function), ..prov_chain(chain) };
                model.add_constraint([(1.0, a), (-1.0, b)], Sense::Eq, 0.0, Family::Colocate, prov);
            }
        }
    }
}

/// `M·x_loc(v,f) ≥ Σ x_place ≥ x_loc(v,f)` and `Σ_v x_loc(v,f) ≤ R_f`,
/// with M the total number of chain positions.
pub fn add_replica_tracking(model: &mut MilpModel, problem: &PlacementProblem) -> Result<(), IlpError> {
    let used = problem.used_functions();
    for &f in &used {
        let r = problem.vnfs.max_replicas(f);
        if r < 1 {
            return Err(IlpError::NoReplicas(f, r));
        }
    }
    let big_m = problem.position_count() as f64;
    model.big_m = big_m;
    let nfv: Vec<NodeId> = problem.topology.nfv_nodes().collect();
    for &f in &used {
        let mut loc_terms = Vec::new();
        for &v in &nfv {
            let loc = model.var(VarRef::Loc { node: v, function: f });
            loc_terms.push((1.0, loc));
            let mut placed = Vec::new();
            for chain in &problem.chains {
                for i in 1..=chain.len() {
                    if chain.position(i).function == f {
                        placed.push(model.var(place_ref(chain, i, v)));
                    }
                }
            }
            let prov = Provenance { node: Some(v), function: Some(f), ..Default::default() };
            let sum = || placed.iter().map(|&x| (1.0, x));
            model.add_constraint(sum().chain([(-big_m, loc)]), Sense::Le, 0.0, Family::Eq7, prov);
            model.add_constraint(sum().chain([(-1.0, loc)]), Sense::Ge, 0.0, Family::Eq7, prov);
            if problem.options.link_rows {
                let mut seen = std::collections::HashSet::new();
                for &x in &placed {
                    if seen.insert(x) {
                        model.add_constraint([(1.0, x), (-1.0, loc)], Sense::Le, 0.0, Family::Eq7Link, prov);
                    }
                }
            }
        }
        let prov = Provenance { function: Some(f), ..Default::default() };
        model.add_constraint(loc_terms, Sense::Le, problem.vnfs.max_replicas(f) as f64, Family::Eq8, prov);
    }
    Ok(())
}

/// Σ_c D^c Σ_i β_{i-1} n^core_{f_i} x_place(c,i,v) ≤ n^core(v) for real functions.
pub fn add_core_capacity(model: &mut MilpModel, problem: &PlacementProblem) {
    for node in problem.topology.nodes().iter().filter(|n| n.nfv_capable) {
        let mut terms = Vec::new();
        for chain in &problem.chains {
            for i in 1..=chain.len() {
                let f = chain.position(i).function;
                if f.is_pseudo() {
                    continue;
                }
                let coef = chain.inbound_load(i) * problem.vnfs.spec(f).cores_per_gbps;
                terms.push((coef, model.var(place_ref(chain, i, node.id))));
            }
        }
        if terms.is_empty() {
            continue;
        }
        let prov = Provenance { node: Some(node.id), ..Default::default() };
        model.add_constraint(terms, Sense::Le, node.cores as f64, Family::Eq9, prov);
    }
}

pub fn add_link_capacity(model: &mut MilpModel, problem: &PlacementProblem) {
    if problem.chains.is_empty() {
        return;
    }
    let topo = &problem.topology;
    let groups: Vec<Vec<_>> = match problem.options.capacity_mode {
        CapacityMode::PerArc => topo.arcs().iter().map(|a| vec![a.id]).collect(),
        CapacityMode::SharedFiber => topo.arcs().chunks(2).map(|p| p.iter().map(|a| a.id).collect()).collect(),
    };
    for group in groups {
        let mut terms = Vec::new();
        for chain in &problem.chains {
            for i in chain.segments() {
                for &arc in &group {
                    terms.push((chain.segment_load(i), route(model, chain, i, arc)));
                }
            }
        }
        let prov = Provenance { arc: Some(group[0]), ..Default::default() };
        model.add_constraint(terms, Sense::Le, topo.arc(group[0]).capacity_gbps, Family::Eq10, prov);
    }
}

/// Propagation over routed arcs plus load-proportional processing stays
/// within the chain's budget. Processing does not depend on placement, so it
/// moves to the right-hand side.
pub fn add_latency(model: &mut MilpModel, problem: &PlacementProblem) {
    for chain in &problem.chains {
        let processing: f64 = (1..=chain.len())
            .filter(|&i| !chain.position(i).function.is_pseudo())
            .map(|i| chain.inbound_load(i) * problem.vnfs.spec(chain.position(i).function).proc_latency_ms_per_gbps)
            .sum();
        let mut terms = Vec::new();
        for i in chain.segments() {
            for arc in problem.topology.arcs() {
                terms.push((arc.prop_latency_ms, route(model, chain, i, arc.id)));
            }
        }
        model.add_constraint(terms, Sense::Le, chain.latency_budget_ms - processing, Family::Eq11, prov_chain(chain));
    }
}

/// Optional: at most `cap` nodes host any function.
pub fn add_node_count_cap(model: &mut MilpModel, problem: &PlacementProblem, cap: u32) {
    let used = problem.used_functions();
    if used.is_empty() {
        return;
    }
    let mut total = Vec::new();
    for v in problem.topology.nfv_nodes() {
        let u = model.var(VarRef::NodeUsed { node: v });
        total.push((1.0, u));
        for &f in &used {
            let loc = model.var(VarRef::Loc { node: v, function: f });
            let prov = Provenance { node: Some(v), function: Some(f), ..Default::default() };
            model.add_constraint([(1.0, u), (-1.0, loc)], Sense::Ge, 0.0, Family::NodeCount, prov);
        }
    }
    model.add_constraint(total, Sense::Le, cap as f64, Family::NodeCount, Provenance::default());
}

pub fn build_model(problem: &PlacementProblem) -> Result<MilpModel, IlpError> {
    let mut model = MilpModel::new();
    create_placement_vars(&mut model, problem);
    create_route_vars(&mut model, problem);
    model.objective = build_objective(&mut model, problem);
    add_endpoint_constraints(&mut model, problem)?;
    add_unique_placement(&mut model, problem);
    add_flow_conservation(&mut model, problem);
    add_colocation_coupling(&mut model, problem);
    add_replica_tracking(&mut model, problem)?;
    add_core_capacity(&mut model, problem);
    add_link_capacity(&mut model, problem);
    add_latency(&mut model, problem);
    if let Some(cap) = problem.options.max_nfv_nodes {
        add_node_count_cap(&mut model, problem, cap);
    }
    Ok(model)
}

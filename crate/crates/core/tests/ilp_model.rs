mod common;

use common::*;
use vepc_core::experiments::Scenario;
use vepc_core::ilp::{build_model, Family, MilpModel, Sense, VarRef};
use vepc_core::model::{default_topology, ArcId, VnfSpec};
use vepc_core::solve::{solve_exhaustive, SolveStatus};
use vepc_core::{NodeId, PlacementProblem, VnfCatalog, VnfId};

fn two_node_problem() -> PlacementProblem {
    let topo = topology(vec![node(1, true, 100), node(2, true, 100)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let c = chain(1, 1, 2, &[VnfId::Sgw, VnfId::Pgw], 1.0, 1.0, 100.0);
    PlacementProblem::new(topo, vec![c], VnfCatalog::default())
}

fn row(model: &MilpModel, family: Family, pred: impl Fn(&vepc_core::ilp::LinearConstraint) -> bool) -> &vepc_core::ilp::LinearConstraint {
    let rows: Vec<_> = model.constraints().iter().filter(|c| c.family == family && pred(c)).collect();
    assert_eq!(rows.len(), 1, "expected exactly one {family} row");
    rows[0]
}

fn coef(model: &MilpModel, c: &vepc_core::ilp::LinearConstraint, var: VarRef) -> f64 {
    let id = model.lookup(&var).expect("variable exists");
    c.terms.iter().filter(|(_, v)| *v == id).map(|(k, _)| *k).sum()
}

#[test]
fn closed_form_counts_for_one_chain_on_two_nodes() {
    // SRC@1, SGW, PGW, DST@2 over one fiber (two arcs), both nodes NFV.
    // x_place: SRC 1 + DST 1 + 2 functions x 2 nodes = 6
    // x_loc:   2 functions x 2 nodes = 4
    // y:       3 segments x 2 arcs = 6
    let m = build_model(&two_node_problem()).unwrap();
    assert_eq!(m.count_vars(|v| matches!(v, VarRef::Place { .. })), 6);
    assert_eq!(m.count_vars(|v| matches!(v, VarRef::Loc { .. })), 4);
    assert_eq!(m.count_vars(|v| matches!(v, VarRef::Route { .. })), 6);
    assert_eq!(m.num_vars(), 16);

    let expected = [
        (Family::Eq2, 2),
        (Family::Eq3, 0),
        (Family::Eq4, 2),
        (Family::Eq5, 3 * 2),
        (Family::Eq6, 0),
        (Family::Eq7, 2 * 4),
        (Family::Eq7Link, 4),
        (Family::Eq8, 2),
        (Family::Eq9, 2),
        (Family::Eq10, 2),
        (Family::Eq11, 1),
        (Family::Colocate, 0),
        (Family::NodeCount, 0),
    ];
    for (family, n) in expected {
        assert_eq!(m.family_count(family), n, "{family}");
    }
    assert_eq!(m.constraints().len(), 29);
    assert!(m.unreferenced_vars().is_empty());
    assert_eq!(m.big_m, 4.0);
}

#[test]
fn empty_chain_set_gives_empty_model() {
    let p = PlacementProblem::new(default_topology(), vec![], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    assert_eq!(m.num_vars(), 0);
    assert!(m.objective.terms.is_empty());
}

#[test]
fn endpoint_rows_pin_and_exclude() {
    // node 1 is a plain TAP, node 2 NFV
    let topo = topology(vec![node(1, false, 0), node(2, true, 100)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let c = chain(1, 1, 2, &[VnfId::Mme], 1.0, 1.0, 100.0);
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    let src = VarRef::Place { chain: 1, position: 1, instance: 1, node: NodeId(1) };
    let r = row(&m, Family::Eq2, |c| c.provenance.position == Some(1));
    assert_eq!((r.sense, r.rhs, coef(&m, r, src)), (Sense::Eq, 1.0, 1.0));
    let mme_at_tap = VarRef::Place { chain: 1, position: 2, instance: 1, node: NodeId(1) };
    let r = row(&m, Family::Eq3, |_| true);
    assert_eq!((r.sense, r.rhs, coef(&m, r, mme_at_tap)), (Sense::Eq, 0.0, 1.0));
    // eq4 sums over NFV nodes only
    let r = row(&m, Family::Eq4, |_| true);
    assert_eq!(r.terms.len(), 1);
}

#[test]
fn all_nfv_default_topology_has_19_term_placement_rows() {
    let problem = Scenario::metro_default().instantiate(1).unwrap();
    let m = build_model(&problem).unwrap();
    assert_eq!(m.family_count(Family::Eq3), 0);
    let nfv = problem.topology.nfv_nodes().count();
    assert_eq!(nfv, 19);
    let real_positions: usize =
        problem.chains.iter().map(|c| c.positions.iter().filter(|p| !p.function.is_pseudo()).count()).sum();
    assert_eq!(m.family_count(Family::Eq4), real_positions);
    assert!(m.constraints().iter().filter(|c| c.family == Family::Eq4).all(|c| c.terms.len() == 19));
    let eq5: usize = problem.chains.iter().map(|c| (c.len() - 1) * 19).sum();
    assert_eq!(m.family_count(Family::Eq5), eq5);
    assert_eq!(m.family_count(Family::Eq6), 0);
    assert_eq!(m.family_count(Family::Eq11), problem.chains.len());
    assert!(m.unreferenced_vars().is_empty());
}

#[test]
fn transit_nodes_get_conservation_rows() {
    // 1 - 2 - 3 with node 2 a plain switch
    let topo = topology(
        vec![node(1, true, 100), node(2, false, 0), node(3, true, 100)],
        vec![link(1, 1, 2, 60.0, 50.0), link(2, 2, 3, 60.0, 50.0)],
    );
    let c = chain(1, 1, 3, &[VnfId::Sgw], 1.0, 1.0, 100.0);
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    assert_eq!(m.family_count(Family::Eq5), 2 * 2);
    assert_eq!(m.family_count(Family::Eq6), 2);
    let r = row(&m, Family::Eq6, |c| c.provenance.position == Some(1));
    assert_eq!(r.rhs, 0.0);
    assert_eq!(r.terms.len(), 4);
}

#[test]
fn colocation_rows_tie_repeated_labels_only() {
    let topo = topology(vec![node(1, true, 100), node(2, true, 100)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let positions = vec![
        pos(VnfId::Src, 1),
        pos(VnfId::Mme, 1),
        pos(VnfId::Hss, 1),
        pos(VnfId::Mme, 1),
        pos(VnfId::Mme, 2),
        pos(VnfId::Dst, 1),
    ];
    let c = vepc_core::ServiceChain::new(1, NodeId(1), NodeId(2), positions, vec![0.05; 5], 1.0, 100.0).unwrap();
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    // positions 2 and 4 share label 1: one row per NFV node; label 2 stands alone
    assert_eq!(m.family_count(Family::Colocate), 2);
}

#[test]
fn replica_rows_use_position_count_as_big_m() {
    let mut p = two_node_problem();
    p.vnfs.set_replicas(VnfId::Sgw, 1);
    let m = build_model(&p).unwrap();
    let loc = VarRef::Loc { node: NodeId(2), function: VnfId::Sgw };
    let r = row(&m, Family::Eq7, |c| {
        c.provenance.node == Some(NodeId(2)) && c.provenance.function == Some(VnfId::Sgw) && c.sense == Sense::Le
    });
    assert_eq!(coef(&m, r, loc), -4.0);
    let r = row(&m, Family::Eq8, |c| c.provenance.function == Some(VnfId::Sgw));
    assert_eq!(r.rhs, 1.0);
}

#[test]
fn zero_replicas_for_a_used_function_is_rejected() {
    let mut p = two_node_problem();
    p.vnfs.set_replicas(VnfId::Sgw, 0);
    assert!(build_model(&p).is_err());
}

// Each constant below is a hand value, not read back from the crate.

#[test]
fn cores_constant_is_two_per_gbps() {
    assert_eq!(VnfCatalog::default().spec(VnfId::Sgw).cores_per_gbps, 2.0);
    let topo = topology(vec![node(1, true, 2400), node(2, true, 2400)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let c = chain(1, 1, 2, &[VnfId::Sgw], 1.0, 10.0, 100.0);
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    let r = row(&m, Family::Eq9, |c| c.provenance.node == Some(NodeId(1)));
    let x = VarRef::Place { chain: 1, position: 2, instance: 1, node: NodeId(1) };
    assert_eq!(coef(&m, r, x), 20.0);
    assert_eq!(r.rhs, 2400.0);

    // control segment into MME: 1 Gbps x 0.05 x 2
    let c = chain(1, 1, 2, &[VnfId::Mme], 0.05, 1.0, 100.0);
    let p = PlacementProblem::new(p.topology.clone(), vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    let r = row(&m, Family::Eq9, |c| c.provenance.node == Some(NodeId(2)));
    let x = VarRef::Place { chain: 1, position: 2, instance: 1, node: NodeId(2) };
    assert!((coef(&m, r, x) - 0.1).abs() < 1e-12);
}

#[test]
fn link_capacity_is_sixty_gbps() {
    let topo = default_topology();
    assert!(topo.arcs().iter().all(|a| a.capacity_gbps == 60.0));
    let p = two_node_problem();
    let m = build_model(&p).unwrap();
    for arc in [ArcId(0), ArcId(1)] {
        let r = row(&m, Family::Eq10, |c| c.provenance.arc == Some(arc));
        assert_eq!(r.rhs, 60.0);
        assert_eq!(r.terms.len(), 3);
        assert!(r.terms.iter().all(|(k, _)| *k == 1.0));
    }
}

#[test]
fn processing_is_132_microseconds_per_gbps() {
    assert_eq!(VnfCatalog::default().spec(VnfId::Sgw).proc_latency_ms_per_gbps, 0.132);
    let topo = topology(vec![node(1, true, 100), node(2, true, 100)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let c = chain(1, 1, 2, &[VnfId::Sgw], 1.0, 10.0, 100.0);
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    let r = row(&m, Family::Eq11, |_| true);
    assert!((r.rhs - (100.0 - 1.32)).abs() < 1e-9);
}

#[test]
fn propagation_is_quarter_millisecond_per_50_km() {
    let topo = topology(
        (1..=4).map(|i| node(i, true, 100)).collect(),
        vec![link(1, 1, 2, 60.0, 50.0), link(2, 2, 3, 60.0, 50.0), link(3, 3, 4, 60.0, 50.0)],
    );
    assert!(topo.arcs().iter().all(|a| a.prop_latency_ms == 0.25));
    assert!((topo.shortest_path_latency(NodeId(1), NodeId(4)).unwrap() - 0.75).abs() < 1e-12);

    let c = chain(1, 1, 4, &[], 1.0, 1.0, 100.0);
    let p = PlacementProblem::new(topo, vec![c], VnfCatalog::default());
    let m = build_model(&p).unwrap();
    let r = row(&m, Family::Eq11, |_| true);
    assert_eq!(r.rhs, 100.0);
    assert!(r.terms.iter().all(|(k, _)| *k == 0.25));
}

#[test]
fn seven_ten_gig_chains_overload_one_arc() {
    let topo = topology(vec![node(1, true, 1000), node(2, true, 1000)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let limits = vepc_core::solve::OracleLimits { max_chains: 7, ..Default::default() };
    let run = |n: u32| {
        let chains = (1..=n).map(|id| chain(id, 1, 2, &[], 1.0, 10.0, 100.0)).collect();
        let p = PlacementProblem::new(topo.clone(), chains, VnfCatalog::default());
        let cfg = vepc_core::solve::SolverConfig { oracle: limits.clone(), ..vepc_core::solve::SolverConfig::new(vepc_core::solve::Engine::Exhaustive) };
        let s = vepc_core::solve::solve(&p, &cfg).unwrap();
        (p, s)
    };
    let (_, s) = run(6);
    assert_eq!(s.meta.status, SolveStatus::Optimal);
    assert_eq!(s.objective, 60.0);
    let (p, s) = run(7);
    assert_eq!(s.meta.status, SolveStatus::Infeasible);
    if let Some(solver) = external_solver() {
        let s = vepc_core::solve::solve(&p, &vepc_core::solve::SolverConfig {
            external: Some(solver),
            ..vepc_core::solve::SolverConfig::new(vepc_core::solve::Engine::External)
        })
        .unwrap();
        assert_eq!(s.meta.status, SolveStatus::Infeasible);
    }
}

#[test]
fn objective_hand_sums() {
    // forced route of three links, D = 1, beta = 1
    let topo = topology(
        (1..=4).map(|i| node(i, i == 1 || i == 4, 100)).collect(),
        vec![link(1, 1, 2, 60.0, 50.0), link(2, 2, 3, 60.0, 50.0), link(3, 3, 4, 60.0, 50.0)],
    );
    let p = PlacementProblem::new(topo.clone(), vec![chain(1, 1, 4, &[], 1.0, 1.0, 100.0)], VnfCatalog::default());
    assert_eq!(solve_exhaustive(&p).unwrap().objective, 3.0);

    // control segment beta 0.05, D = 2, one link
    let t2 = topology(vec![node(1, true, 100), node(2, true, 100)], vec![link(1, 1, 2, 60.0, 50.0)]);
    let p = PlacementProblem::new(t2, vec![chain(1, 1, 2, &[], 0.05, 2.0, 100.0)], VnfCatalog::default());
    assert!((solve_exhaustive(&p).unwrap().objective - 0.1).abs() < 1e-12);

    // two identical chains double the objective
    let one = PlacementProblem::new(topo.clone(), vec![chain(1, 1, 4, &[VnfId::Sgw], 1.0, 2.0, 100.0)], VnfCatalog::default());
    let two = PlacementProblem::new(
        topo,
        vec![chain(1, 1, 4, &[VnfId::Sgw], 1.0, 2.0, 100.0), chain(2, 1, 4, &[VnfId::Sgw], 1.0, 2.0, 100.0)],
        VnfCatalog::default(),
    );
    let a = solve_exhaustive(&one).unwrap().objective;
    let b = solve_exhaustive(&two).unwrap().objective;
    assert_eq!(a, 6.0);
    assert_eq!(b, 2.0 * a);
}

#[test]
fn shared_fiber_mode_sums_both_directions() {
    let mut p = two_node_problem();
    p.options.capacity_mode = vepc_core::CapacityMode::SharedFiber;
    let m = build_model(&p).unwrap();
    assert_eq!(m.family_count(Family::Eq10), 1);
    assert_eq!(m.constraints().iter().find(|c| c.family == Family::Eq10).unwrap().terms.len(), 6);
}

#[test]
fn node_cap_adds_usage_rows() {
    let mut p = two_node_problem();
    p.options.max_nfv_nodes = Some(1);
    let m = build_model(&p).unwrap();
    // u_v >= x_loc(v,f) per node and used function, plus the cap row
    assert_eq!(m.family_count(Family::NodeCount), 2 * 2 + 1);
    assert_eq!(m.count_vars(|v| matches!(v, VarRef::NodeUsed { .. })), 2);
}

#[test]
fn disabling_link_rows_drops_eq7_link() {
    let mut p = two_node_problem();
    p.options.link_rows = false;
    let m = build_model(&p).unwrap();
    assert_eq!(m.family_count(Family::Eq7Link), 0);
    assert_eq!(m.family_count(Family::Eq7), 8);
}

#[test]
fn default_model_builds_quickly() {
    let problem = Scenario::metro_default().instantiate(1).unwrap();
    let t = std::time::Instant::now();
    let m = build_model(&problem).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    assert!(m.num_vars() > 0);
    let text = m.dump();
    assert!(text.contains("eq11"));
}

#[test]
fn vnf_spec_defaults() {
    let v = VnfCatalog::default();
    for f in VnfId::REAL {
        let VnfSpec { cores_per_gbps, proc_latency_ms_per_gbps, .. } = v.spec(f);
        assert_eq!((cores_per_gbps, proc_latency_ms_per_gbps), (2.0, 0.132));
    }
}

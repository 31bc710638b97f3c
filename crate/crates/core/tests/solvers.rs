mod common;

use common::*;
use proptest::prelude::*;
use vepc_core::experiments::Scenario;
use vepc_core::ilp::{build_model, Family, MilpModel, Provenance, Sense, VarRef};
use vepc_core::solve::*;
use vepc_core::verify::check_solution;
use vepc_core::{NodeId, PlacementProblem, SolveError, VnfId};

const REL: f64 = 1e-6;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn oracle_and_greedy_solutions_verify() {
    let mut optimal = 0;
    for seed in 0..60 {
        let p = random_tiny(seed);
        let exact = solve_exhaustive(&p).unwrap();
        assert_eq!(exact.meta.gap, if exact.meta.status == SolveStatus::Optimal { Some(0.0) } else { None });
        if exact.meta.status == SolveStatus::Optimal {
            optimal += 1;
            let report = check_solution(&p, &exact);
            assert!(report.passed(), "seed {seed}: {report}");
        }
        let greedy = solve_greedy(&p);
        if greedy.meta.status.has_solution() {
            assert!(check_solution(&p, &greedy).passed(), "seed {seed}");
            assert_eq!(exact.meta.status, SolveStatus::Optimal, "seed {seed}: greedy found a solution the oracle missed");
            assert!(greedy.objective >= exact.objective - 1e-9, "seed {seed}");
        }
    }
    // the generator must exercise both outcomes
    assert!((20..=50).contains(&optimal), "{optimal} optimal instances");
}

#[test]
fn greedy_finds_a_verified_solution_on_the_default_scenario() {
    let p = Scenario::metro_default().instantiate(1).unwrap();
    let s = solve_greedy(&p);
    assert_eq!(s.meta.status, SolveStatus::Feasible);
    assert!(check_solution(&p, &s).passed());
}

#[test]
fn oracle_refuses_large_instances() {
    let p = Scenario::metro_default().instantiate(1).unwrap();
    assert!(matches!(solve_exhaustive(&p), Err(SolveError::TooLarge(_))));
}

#[test]
fn missing_solver_is_an_error() {
    let p = random_tiny(1);
    let cfg = SolverConfig {
        external: Some(ExternalSolver::from_template("/nonexistent/cbc {mps} -solu {sol}", 10.0)),
        ..SolverConfig::new(Engine::External)
    };
    assert!(matches!(solve(&p, &cfg), Err(SolveError::SolverNotFound(_))));
}

#[test]
fn mps_round_trip_on_default_model() {
    let p = Scenario::metro_default().instantiate(1).unwrap();
    let model = build_model(&p).unwrap();
    let doc = export_mps(&model);
    let back = parse_mps(&doc.text).unwrap();
    assert_eq!(back.columns.len(), model.num_vars());
    assert_eq!(back.rows.len(), model.constraints().len());
    assert_eq!(back.binaries.len(), model.num_vars());
    let nnz: usize = model.constraints().iter().map(|c| c.terms.len()).sum::<usize>() + model.objective.terms.len();
    assert_eq!(back.coefficients.len(), nnz);
}

#[test]
fn one_variable_model_through_external_solver() {
    let Some(solver) = external_solver() else {
        eprintln!("no external solver installed; skipped");
        return;
    };
    let mut m = MilpModel::new();
    let x = m.var(VarRef::NodeUsed { node: NodeId(1) });
    m.objective.terms.push((1.0, x));
    m.add_constraint([(1.0, x)], Sense::Ge, 1.0, Family::NodeCount, Provenance::default());
    let raw = solver.run_raw(&m).unwrap();
    assert_eq!(raw.status, SolveStatus::Optimal);
    assert_eq!(raw.values, vec![1.0]);
}

#[test]
fn external_solver_matches_oracle_on_small_set() {
    let Some(solver) = external_solver() else {
        eprintln!("no external solver installed; skipped");
        return;
    };
    let cfg = SolverConfig { external: Some(solver), ..SolverConfig::new(Engine::External) };
    for seed in 100..115 {
        let p = random_tiny(seed);
        let exact = solve_exhaustive(&p).unwrap();
        let ext = solve(&p, &cfg).unwrap();
        assert_eq!(ext.meta.status, exact.meta.status, "seed {seed}");
        assert!(close(ext.objective, exact.objective), "seed {seed}: {} vs {}", ext.objective, exact.objective);
        if ext.meta.status.has_solution() {
            assert!(check_solution(&p, &ext).passed(), "seed {seed}");
        }
    }
}

fn scaled(p: &PlacementProblem, k: f64) -> PlacementProblem {
    let mut out = p.clone();
    for c in &mut out.chains {
        c.demand_gbps *= k;
    }
    out
}

fn renumbered(p: &PlacementProblem) -> PlacementProblem {
    let mut out = p.clone();
    out.chains.reverse();
    let n = out.chains.len() as u32;
    for (k, c) in out.chains.iter_mut().enumerate() {
        c.id = 100 + n - k as u32;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Scaling every demand by k scales the optimum by k when nothing binds.
    #[test]
    fn objective_scales_with_demand(seed in 0u64..10_000, k in prop_oneof![Just(0.5), Just(2.0), Just(3.0)]) {
        let p = unconstrained(&random_tiny(seed));
        let base = solve_exhaustive(&p).unwrap();
        let s = solve_exhaustive(&scaled(&p, k)).unwrap();
        prop_assert_eq!(base.meta.status, s.meta.status);
        prop_assert!(close(s.objective, k * base.objective));
    }

    // Raising any replica limit never makes the optimum worse.
    #[test]
    fn relaxing_replicas_never_hurts(seed in 0u64..10_000, f in 0usize..5) {
        let p = random_tiny(seed);
        let mut looser = p.clone();
        let func = VnfId::REAL[f];
        looser.vnfs.set_replicas(func, p.vnfs.max_replicas(func) + 1);
        let a = solve_exhaustive(&p).unwrap();
        let b = solve_exhaustive(&looser).unwrap();
        if a.meta.status == SolveStatus::Optimal {
            prop_assert_eq!(b.meta.status, SolveStatus::Optimal);
            prop_assert!(b.objective <= a.objective + 1e-9);
        }
    }

    // Chain ids and order carry no meaning.
    #[test]
    fn chain_order_and_ids_do_not_matter(seed in 0u64..10_000) {
        let p = random_tiny(seed);
        let q = renumbered(&p);
        let a = solve_exhaustive(&p).unwrap();
        let b = solve_exhaustive(&q).unwrap();
        prop_assert_eq!(a.meta.status, b.meta.status);
        prop_assert!(close(a.objective, b.objective));
        if b.meta.status.has_solution() {
            prop_assert!(check_solution(&q, &b).passed());
        }
    }

    // Greedy is a heuristic: never better than the oracle, always verified.
    #[test]
    fn greedy_is_an_upper_bound(seed in 0u64..10_000) {
        let p = random_tiny(seed);
        let g = solve_greedy(&p);
        if g.meta.status.has_solution() {
            let e = solve_exhaustive(&p).unwrap();
            prop_assert!(check_solution(&p, &g).passed());
            prop_assert!(g.objective >= e.objective - 1e-9);
        }
    }
}

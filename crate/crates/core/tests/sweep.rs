use std::path::Path;

use vepc_core::experiments::{
    emit_results, run_sweep, EmitOptions, ReplicaLimits, Scenario, SweepKind, SweepRunner, SweepSpec,
};
use vepc_core::solve::{Engine, SolverConfig};

fn tiny() -> Scenario {
    Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/tiny/scenario.json")).unwrap()
}

fn runner() -> SweepRunner {
    SweepRunner { solver: SolverConfig::new(Engine::Exhaustive), jobs: 2 }
}

#[test]
fn tiny_sweep_is_monotone_and_complete() {
    let spec = SweepSpec::vepc(&[1, 2, 3], 4, 7);
    let result = run_sweep(&tiny(), &spec, &runner()).unwrap();
    assert_eq!(result.records.len(), 12);
    assert!(result.records.iter().all(|r| r.status == "optimal"));
    assert!(result.audit.is_empty());
    let means: Vec<f64> = ["1", "2", "3"].iter().map(|c| result.mean(c).unwrap()).collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{means:?}");
    // records come back in (point, iteration) order whatever the thread count
    let order: Vec<(String, u32)> = result.records.iter().map(|r| (r.config.clone(), r.iteration)).collect();
    let mut sorted = order.clone();
    sorted.sort_by_key(|(c, k)| (c.parse::<u32>().unwrap(), *k));
    assert_eq!(order, sorted);
    assert_eq!(result.records[5].seed, 7 + 1);
}

#[test]
fn emitted_files_are_byte_identical_without_timing() {
    let spec = SweepSpec::vnf(
        vec!["all=1".parse::<ReplicaLimits>().unwrap(), "MME=1,rest=2".parse().unwrap(), ReplicaLimits::uniform(2)],
        3,
        11,
    );
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = emit_results(&run_sweep(&tiny(), &spec, &runner()).unwrap(), dir_a.path(), EmitOptions { timing: false }).unwrap();
    let b = emit_results(&run_sweep(&tiny(), &spec, &runner()).unwrap(), dir_b.path(), EmitOptions { timing: false }).unwrap();
    for (x, y) in [(&a.iterations, &b.iterations), (&a.summary, &b.summary), (&a.plot, &b.plot)] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    assert!(a.iterations.ends_with("fig4c_iterations.csv"));
    let text = std::fs::read_to_string(&a.iterations).unwrap();
    assert!(text.starts_with("config,iteration,seed,objective,status,wall_time\n"));
    assert_eq!(text.lines().count(), 1 + 9);
    let summary = std::fs::read_to_string(&a.summary).unwrap();
    assert!(summary.starts_with("config,iterations,solved,mean,std\n"));
    assert!(summary.contains("\"MME=1,rest=2\",3,3,"));
    let plot: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a.plot).unwrap()).unwrap();
    assert_eq!(plot["figure"], "fig4c");
    assert_eq!(plot["points"].as_array().unwrap().len(), 3);
}

#[test]
fn timing_column_is_filled_by_default() {
    let spec = SweepSpec::vepc(&[2], 1, 1);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_results(&run_sweep(&tiny(), &spec, &runner()).unwrap(), dir.path(), EmitOptions::default()).unwrap();
    let text = std::fs::read_to_string(files.iterations).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(!row.ends_with(','), "{row}");
}

#[test]
fn named_sweeps() {
    let b = SweepSpec::for_kind(SweepKind::VepcReplicas, 10, 1);
    let labels: Vec<_> = b.points.iter().map(|p| p.label.as_str()).collect();
    assert_eq!(labels, ["1", "2", "3", "4", "5"]);
    let c = SweepSpec::for_kind(SweepKind::VnfReplicas, 10, 1);
    assert_eq!(c.points.len(), 6);
    assert_eq!("fig4c".parse::<SweepKind>().unwrap(), SweepKind::VnfReplicas);
}

#[test]
fn unwritable_output_is_reported() {
    let spec = SweepSpec::vepc(&[2], 1, 1);
    let result = run_sweep(&tiny(), &spec, &runner()).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    let err = emit_results(&result, &file.path().join("sub"), EmitOptions::default()).unwrap_err();
    assert!(matches!(err, vepc_core::ExperimentError::Output { .. }));
}

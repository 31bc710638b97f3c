//! Scenario generation, replica sweeps and result files.

pub mod emit;
pub mod scenario;
pub mod sweep;

pub use emit::{emit_results, EmitOptions, EmittedFiles};
pub use scenario::{generate_flows, FlowCounts, ReplicaLimits, Scenario, ScenarioDoc, SolverSettings};
pub use sweep::{
    mean_std, monotonicity_audit, run_sweep, ConfigSummary, IterationRecord, MonotonicityFlag, SweepKind, SweepPoint,
    SweepResult, SweepRunner, SweepSpec,
};

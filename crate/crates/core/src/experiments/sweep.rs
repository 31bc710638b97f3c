use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{ReplicaLimits, Scenario};
use crate::error::ExperimentError;
use crate::model::{TrafficFlow, VnfId};
use crate::solve::{solve, SolverConfig};
use crate::verify::check_solution;

/// One configuration of a sweep: a label and the replica limits it applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPoint {
    pub label: String,
    pub limits: ReplicaLimits,
}

impl SweepPoint {
    pub fn new(limits: ReplicaLimits) -> Self {
        SweepPoint { label: limits.to_string(), limits }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Same replica limit for every function, varied over `r`.
    VepcReplicas,
    /// Per-function limit maps.
    VnfReplicas,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::VepcReplicas => "fig4b",
            SweepKind::VnfReplicas => "fig4c",
        }
    }

    pub fn x_label(self) -> &'static str {
        match self {
            SweepKind::VepcReplicas => "Number of vEPC replicas",
            SweepKind::VnfReplicas => "VNF replica configuration",
        }
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig4b" | "vepc" => Ok(SweepKind::VepcReplicas),
            "fig4c" | "vnf" => Ok(SweepKind::VnfReplicas),
            other => Err(format!("unknown sweep {other} (expected fig4b or fig4c)")),
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub points: Vec<SweepPoint>,
    pub iterations: u32,
    /// Iteration `k` uses seed `base_seed + k` for every point, so points
    /// are compared on the same flows.
    pub base_seed: u64,
}

impl SweepSpec {
    /// `R_f = r` for all functions, one point per `r`.
    pub fn vepc(r_values: &[u32], iterations: u32, base_seed: u64) -> Self {
        let points = r_values
            .iter()
            .map(|&r| SweepPoint { label: r.to_string(), limits: ReplicaLimits::uniform(r) })
            .collect();
        SweepSpec { kind: SweepKind::VepcReplicas, points, iterations, base_seed }
    }

    pub fn vnf(configs: Vec<ReplicaLimits>, iterations: u32, base_seed: u64) -> Self {
        let points = configs.into_iter().map(SweepPoint::new).collect();
        SweepSpec { kind: SweepKind::VnfReplicas, points, iterations, base_seed }
    }

    /// r = 1..5.
    pub fn fig4b(iterations: u32, base_seed: u64) -> Self {
        Self::vepc(&[1, 2, 3, 4, 5], iterations, base_seed)
    }

    /// One function cut to a single replica at a time, SGW and PGW alone
    /// replicated, everything at two, and everything at one.
    pub fn fig4c(iterations: u32, base_seed: u64) -> Self {
        let two = ReplicaLimits::uniform(2);
        let configs = vec![
            two.clone().with(VnfId::Mme, 1),
            two.clone().with(VnfId::Hss, 1),
            two.clone().with(VnfId::Pcrf, 1),
            ReplicaLimits::uniform(1).with(VnfId::Sgw, 2).with(VnfId::Pgw, 2),
            two,
            ReplicaLimits::uniform(1),
        ];
        Self::vnf(configs, iterations, base_seed)
    }

    pub fn for_kind(kind: SweepKind, iterations: u32, base_seed: u64) -> Self {
        match kind {
            SweepKind::VepcReplicas => Self::fig4b(iterations, base_seed),
            SweepKind::VnfReplicas => Self::fig4c(iterations, base_seed),
        }
    }

    pub fn seed(&self, iteration: u32) -> u64 {
        self.base_seed.wrapping_add(iteration as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub config: String,
    pub iteration: u32,
    pub seed: u64,
    pub objective: Option<f64>,
    /// Solver status, or `error` / `rejected` (failed verification).
    pub status: String,
    pub wall_time_s: f64,
}

impl IterationRecord {
    pub fn solved(&self) -> bool {
        self.objective.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config: String,
    pub iterations: u32,
    pub solved: u32,
    /// `None` when nothing solved or some solution failed verification.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// A seed on which relaxing the replica limits made the objective worse,
/// which points at a solver gap or timeout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityFlag {
    pub seed: u64,
    pub tighter: String,
    pub looser: String,
    pub tighter_objective: f64,
    pub looser_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub records: Vec<IterationRecord>,
    pub summary: Vec<ConfigSummary>,
    pub audit: Vec<MonotonicityFlag>,
}

impl SweepResult {
    pub fn summary_for(&self, config: &str) -> Option<&ConfigSummary> {
        self.summary.iter().find(|s| s.config == config)
    }

    pub fn mean(&self, config: &str) -> Option<f64> {
        self.summary_for(config).and_then(|s| s.mean)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRunner {
    pub solver: SolverConfig,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some((mean, var.sqrt()))
}

/// Objective, status and wall time of one solve.
type PointOutcome = (Option<f64>, String, f64);

fn solve_point(scenario: &Scenario, point: &SweepPoint, flows: &[TrafficFlow], runner: &SweepRunner) -> PointOutcome {
    let problem = match scenario.with_replicas(&point.limits).problem_for(flows) {
        Ok(p) => p,
        Err(e) => {
            warn!("{}: cannot build problem: {e}", point.label);
            return (None, "error".into(), 0.0);
        }
    };
    match solve(&problem, &runner.solver) {
        Ok(sol) => {
            let wall = sol.meta.wall_time_s;
            if !sol.meta.status.has_solution() {
                return (None, sol.meta.status.to_string(), wall);
            }
            let report = check_solution(&problem, &sol);
            if report.passed() {
                (Some(sol.objective), sol.meta.status.to_string(), wall)
            } else {
                warn!("{}: solution failed verification:\n{report}", point.label);
                (None, "rejected".into(), wall)
            }
        }
        Err(e) => {
            warn!("{}: solver error: {e}", point.label);
            (None, "error".into(), 0.0)
        }
    }
}

/// Solves every (point, iteration) pair, verifies each solution and
/// aggregates per point.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, runner: &SweepRunner) -> Result<SweepResult, ExperimentError> {
    let flows: Vec<Vec<TrafficFlow>> =
        (0..spec.iterations).map(|k| scenario.generate_flows(spec.seed(k))).collect::<Result<_, _>>()?;
    let work: Vec<(usize, u32)> =
        (0..spec.points.len()).flat_map(|p| (0..spec.iterations).map(move |k| (p, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(runner.jobs)
        .build()
        .map_err(|e| ExperimentError::Invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<(usize, u32, PointOutcome)> = pool.install(|| {
        work.par_iter()
            .map(|&(p, k)| {
                let point = &spec.points[p];
                let out = solve_point(scenario, point, &flows[k as usize], runner);
                info!("{} {} iteration {k}: {} {:?}", spec.kind, point.label, out.1, out.0);
                (p, k, out)
            })
            .collect()
    });

    let mut records: Vec<IterationRecord> = outcomes
        .into_iter()
        .map(|(p, k, (objective, status, wall_time_s))| IterationRecord {
            config: spec.points[p].label.clone(),
            iteration: k,
            seed: spec.seed(k),
            objective,
            status,
            wall_time_s,
        })
        .collect();
    let order: BTreeMap<&str, usize> = spec.points.iter().enumerate().map(|(i, p)| (p.label.as_str(), i)).collect();
    records.sort_by_key(|r| (order[r.config.as_str()], r.iteration));

    let summary = spec
        .points
        .iter()
        .map(|point| {
            let rows: Vec<&IterationRecord> = records.iter().filter(|r| r.config == point.label).collect();
            let objectives: Vec<f64> = rows.iter().filter_map(|r| r.objective).collect();
            let rejected = rows.iter().any(|r| r.status == "rejected");
            let stats = if rejected { None } else { mean_std(&objectives) };
            ConfigSummary {
                config: point.label.clone(),
                iterations: rows.len() as u32,
                solved: objectives.len() as u32,
                mean: stats.map(|s| s.0),
                std: stats.map(|s| s.1),
            }
        })
        .collect();
    let audit = monotonicity_audit(spec, &records);
    for flag in &audit {
        warn!(
            "seed {}: {} gives {:.6} but looser {} gives {:.6}",
            flag.seed, flag.tighter, flag.tighter_objective, flag.looser, flag.looser_objective
        );
    }
    Ok(SweepResult { kind: spec.kind, records, summary, audit })
}

fn dominates(looser: &ReplicaLimits, tighter: &ReplicaLimits) -> bool {
    looser != tighter && VnfId::REAL.iter().all(|&f| looser.get(f) >= tighter.get(f))
}

/// For each seed and every pair of points where one only relaxes the other,
/// checks that the relaxed objective is not larger.
pub fn monotonicity_audit(spec: &SweepSpec, records: &[IterationRecord]) -> Vec<MonotonicityFlag> {
    let objective: BTreeMap<(&str, u64), f64> =
        records.iter().filter_map(|r| Some(((r.config.as_str(), r.seed), r.objective?))).collect();
    let mut flags = Vec::new();
    for k in 0..spec.iterations {
        let seed = spec.seed(k);
        for t in &spec.points {
            for l in &spec.points {
                if !dominates(&l.limits, &t.limits) {
                    continue;
                }
                let (Some(&to), Some(&lo)) = (objective.get(&(t.label.as_str(), seed)), objective.get(&(l.label.as_str(), seed)))
                else {
                    continue;
                };
                if lo > to + 1e-6 * to.abs().max(1.0) {
                    flags.push(MonotonicityFlag {
                        seed,
                        tighter: t.label.clone(),
                        looser: l.label.clone(),
                        tighter_objective: to,
                        looser_objective: lo,
                    });
                }
            }
        }
    }
    flags
}

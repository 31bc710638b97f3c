//! Solution engines.
//!
//! * [`external`] writes the model as fixed-format MPS, runs a MILP solver
//!   (HiGHS or CBC) as a subprocess and maps its solution file back onto chains and arcs.
//! * [`exhaustive`] enumerates every placement of tiny instances and serves
//!   as the reference oracle.
//! * [`greedy`] is a quick upper bound that needs no solver.

pub mod exhaustive;
pub mod external;
pub mod greedy;
pub mod mps;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{ArcId, NodeId, Topology, VnfId};
use crate::problem::PlacementProblem;

pub use exhaustive::{solve_exhaustive, OracleLimits};
pub use external::{locate_cbc, locate_highs, run_external, ExternalSolver, SolutionFormat};
pub use greedy::solve_greedy;
pub use mps::{export_mps, parse_mps, MpsDocument, MpsModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
    /// Heuristic gave up without a verified solution.
    NotFound,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Timeout => "timeout",
            SolveStatus::NotFound => "not_found",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    External,
    Exhaustive,
    Greedy,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "external" => Ok(Engine::External),
            "exhaustive" => Ok(Engine::Exhaustive),
            "greedy" => Ok(Engine::Greedy),
            other => Err(format!("unknown engine {other}")),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::External => "external",
            Engine::Exhaustive => "exhaustive",
            Engine::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub engine: String,
    pub status: SolveStatus,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub chain: u32,
    pub position: usize,
    pub instance: u32,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub chain: u32,
    pub segment: usize,
    pub arcs: Vec<ArcId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub node: NodeId,
    pub function: VnfId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSolution {
    pub assignments: Vec<Assignment>,
    pub locations: Vec<Location>,
    pub routes: Vec<Route>,
    /// Bandwidth consumed, Gbps summed over links.
    pub objective: f64,
    pub meta: SolverMeta,
}

impl PlacementSolution {
    pub fn without_solution(engine: &str, status: SolveStatus, wall_time_s: f64) -> Self {
        PlacementSolution {
            assignments: Vec::new(),
            locations: Vec::new(),
            routes: Vec::new(),
            objective: 0.0,
            meta: SolverMeta { engine: engine.to_owned(), status, wall_time_s, gap: None },
        }
    }

    /// Builds a complete solution from per-position nodes and per-segment arc
    /// lists. `nodes[k][i-1]` is the node of position `i` of chain `k`;
    /// `routes[k][i-1]` is segment `i`.
    pub fn assemble(
        problem: &PlacementProblem,
        nodes: &[Vec<NodeId>],
        routes: Vec<Vec<Vec<ArcId>>>,
        meta: SolverMeta,
    ) -> Self {
        let mut assignments = Vec::new();
        let mut locations = std::collections::BTreeSet::new();
        let mut out_routes = Vec::new();
        for ((chain, chain_nodes), chain_routes) in problem.chains.iter().zip(nodes).zip(routes) {
            for (k, &node) in chain_nodes.iter().enumerate() {
                let p = chain.positions[k];
                assignments.push(Assignment { chain: chain.id, position: k + 1, instance: p.instance, node });
                if !p.function.is_pseudo() {
                    locations.insert(Location { node, function: p.function });
                }
            }
            for (k, arcs) in chain_routes.into_iter().enumerate() {
                out_routes.push(Route { chain: chain.id, segment: k + 1, arcs });
            }
        }
        let mut sol = PlacementSolution {
            assignments,
            locations: locations.into_iter().collect(),
            routes: out_routes,
            objective: 0.0,
            meta,
        };
        sol.objective = routed_bandwidth(problem, &sol);
        sol
    }

    pub fn node_of(&self, chain: u32, position: usize) -> Option<NodeId> {
        self.assignments
            .iter()
            .find(|a| a.chain == chain && a.position == position)
            .map(|a| a.node)
    }

    pub fn route(&self, chain: u32, segment: usize) -> Option<&[ArcId]> {
        self.routes
            .iter()
            .find(|r| r.chain == chain && r.segment == segment)
            .map(|r| r.arcs.as_slice())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

/// Σ over routed segments of segment load × arc count.
pub fn routed_bandwidth(problem: &PlacementProblem, solution: &PlacementSolution) -> f64 {
    let loads: BTreeMap<(u32, usize), f64> = problem
        .chains
        .iter()
        .flat_map(|c| c.segments().map(move |i| ((c.id, i), c.segment_load(i))))
        .collect();
    solution
        .routes
        .iter()
        .map(|r| loads.get(&(r.chain, r.segment)).copied().unwrap_or(0.0) * r.arcs.len() as f64)
        .sum()
}

/// Orders an unordered arc set into a walk from `start`; arcs that do not
/// continue the walk (cycles) are appended in id order.
pub fn order_walk(topology: &Topology, start: NodeId, mut arcs: Vec<ArcId>) -> Vec<ArcId> {
    arcs.sort();
    let mut out = Vec::with_capacity(arcs.len());
    let mut at = start;
    while let Some(k) = arcs.iter().position(|&a| topology.arc(a).from == at) {
        let a = arcs.remove(k);
        at = topology.arc(a).to;
        out.push(a);
    }
    out.extend(arcs);
    out
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub engine: Engine,
    pub external: Option<ExternalSolver>,
    pub oracle: OracleLimits,
}

impl SolverConfig {
    pub fn new(engine: Engine) -> Self {
        SolverConfig { engine, external: None, oracle: OracleLimits::default() }
    }
}

/// Dispatches to the configured engine.
pub fn solve(problem: &PlacementProblem, config: &SolverConfig) -> Result<PlacementSolution, SolveError> {
    match config.engine {
        Engine::Exhaustive => exhaustive::solve_exhaustive_with(problem, &config.oracle),
        Engine::Greedy => Ok(solve_greedy(problem)),
        Engine::External => {
            let solver = match &config.external {
                Some(s) => s.clone(),
                None => ExternalSolver::detect(external::DEFAULT_TIME_LIMIT_S)?,
            };
            let model = crate::ilp::build_model(problem)?;
            run_external(problem, &model, &solver)
        }
    }
}

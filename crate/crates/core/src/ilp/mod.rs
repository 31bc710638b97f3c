//! Solver-agnostic mixed-integer model of the placement problem.
//!
//! Variables:
//! * `x_place(c, i, j, v)`: instance `j` of the function at position `i` of
//!   chain `c` runs on node `v`;
//! * `x_loc(v, f)`: some instance of function `f` runs on `v`;
//! * `y_route(c, i, ℓ)`: arc `ℓ` carries segment `i` of chain `c`.
//!
//! All variables are binary. Each constraint row carries the family it
//! belongs to and where it came from, so dumps and solver diagnostics can be
//! traced back to a chain position, node or arc.

mod build;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::model::{ArcId, NodeId, VnfId};

pub use build::{
    add_colocation_coupling, add_core_capacity, add_endpoint_constraints, add_flow_conservation, add_latency,
    add_link_capacity, add_node_count_cap, add_replica_tracking, add_unique_placement, build_model,
    build_objective, create_placement_vars, create_route_vars,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarRef {
    Place { chain: u32, position: usize, instance: u32, node: NodeId },
    Loc { node: NodeId, function: VnfId },
    Route { chain: u32, segment: usize, arc: ArcId },
    /// Node hosts at least one function; only present with a node-count cap.
    NodeUsed { node: NodeId },
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Place { chain, position, instance, node } => {
                write!(f, "x_place[c{chain},i{position},j{instance},v{node}]")
            }
            VarRef::Loc { node, function } => write!(f, "x_loc[v{node},{function}]"),
            VarRef::Route { chain, segment, arc } => write!(f, "y[c{chain},i{segment},l{arc}]"),
            VarRef::NodeUsed { node } => write!(f, "u[v{node}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
            Sense::Ge => lhs >= rhs - tol,
        }
    }
}

/// Constraint family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// SRC/DST sit on their endpoint nodes.
    Eq2,
    /// No real function on a non-NFV endpoint.
    Eq3,
    /// Each real position on exactly one NFV node.
    Eq4,
    /// Flow conservation at candidate nodes.
    Eq5,
    /// Flow conservation at transit-only nodes.
    Eq6,
    /// Big-M link between placements and `x_loc`.
    Eq7,
    /// Disaggregated `x_place ≤ x_loc`.
    Eq7Link,
    /// Replica limit.
    Eq8,
    /// CPU cores per node.
    Eq9,
    /// Link bandwidth.
    Eq10,
    /// End-to-end latency per chain.
    Eq11,
    /// Same (function, instance) within a chain shares one node.
    Colocate,
    NodeCount,
    /// Verifier-only: solution is missing pieces.
    Structure,
    /// Verifier-only: claimed objective differs from recomputed.
    Objective,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Eq2 => "eq2",
            Family::Eq3 => "eq3",
            Family::Eq4 => "eq4",
            Family::Eq5 => "eq5",
            Family::Eq6 => "eq6",
            Family::Eq7 => "eq7",
            Family::Eq7Link => "eq7_link",
            Family::Eq8 => "eq8",
            Family::Eq9 => "eq9",
            Family::Eq10 => "eq10",
            Family::Eq11 => "eq11",
            Family::Colocate => "colocate",
            Family::NodeCount => "node_count",
            Family::Structure => "structure",
            Family::Objective => "objective",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc: Option<ArcId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<VnfId>,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(c) = self.chain {
            parts.push(format!("chain={c}"));
        }
        if let Some(p) = self.position {
            parts.push(format!("pos={p}"));
        }
        if let Some(n) = self.node {
            parts.push(format!("node={n}"));
        }
        if let Some(a) = self.arc {
            parts.push(format!("arc={a}"));
        }
        if let Some(func) = self.function {
            parts.push(format!("fn={func}"));
        }
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub terms: Vec<(f64, VarId)>,
}

impl LinearExpr {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| c * values[v.0]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(f64, VarId)>,
    pub sense: Sense,
    pub rhs: f64,
    pub family: Family,
    pub provenance: Provenance,
}

impl LinearConstraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| c * values[v.0]).sum()
    }

    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        self.sense.holds(self.lhs(values), self.rhs, tol)
    }
}

#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    vars: Vec<VarRef>,
    index: HashMap<VarRef, VarId>,
    constraints: Vec<LinearConstraint>,
    pub objective: LinearExpr,
    pub big_m: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `var`, creating it on first use.
    pub fn var(&mut self, var: VarRef) -> VarId {
        if let Some(&id) = self.index.get(&var) {
            return id;
        }
        let id = VarId(self.vars.len());
        self.vars.push(var);
        self.index.insert(var, id);
        id
    }

    pub fn lookup(&self, var: &VarRef) -> Option<VarId> {
        self.index.get(var).copied()
    }

    pub fn var_ref(&self, id: VarId) -> &VarRef {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> &[VarRef] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Adds a row, merging repeated variables and dropping zero coefficients.
    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (f64, VarId)>,
        sense: Sense,
        rhs: f64,
        family: Family,
        provenance: Provenance,
    ) {
        let terms = merge_terms(terms);
        debug_assert!(terms.iter().all(|(c, _)| c.is_finite()) && rhs.is_finite());
        self.constraints.push(LinearConstraint { terms, sense, rhs, family, provenance });
    }

    pub fn family_count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn count_vars(&self, pred: impl Fn(&VarRef) -> bool) -> usize {
        self.vars.iter().filter(|v| pred(v)).count()
    }

    /// Rows violated by an assignment (one value per variable).
    pub fn violated(&self, values: &[f64], tol: f64) -> Vec<&LinearConstraint> {
        self.constraints.iter().filter(|c| !c.is_satisfied(values, tol)).collect()
    }

    /// Variables appearing in no row and not in the objective.
    pub fn unreferenced_vars(&self) -> Vec<VarRef> {
        let mut used = vec![false; self.vars.len()];
        for c in &self.constraints {
            for &(_, v) in &c.terms {
                used[v.0] = true;
            }
        }
        for &(_, v) in &self.objective.terms {
            used[v.0] = true;
        }
        used.iter()
            .enumerate()
            .filter(|(_, u)| !**u)
            .map(|(i, _)| self.vars[i])
            .collect()
    }

    /// Human-readable listing of the objective and every row.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "* {} variables, {} constraints, M = {}", self.vars.len(), self.constraints.len(), self.big_m);
        let _ = write!(out, "minimize:");
        for &(c, v) in &self.objective.terms {
            let _ = write!(out, " {:+} {}", c, self.vars[v.0]);
        }
        out.push('\n');
        for (k, row) in self.constraints.iter().enumerate() {
            let _ = write!(out, "r{k} [{}] {}:", row.family, row.provenance);
            for &(c, v) in &row.terms {
                let _ = write!(out, " {:+} {}", c, self.vars[v.0]);
            }
            let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
        }
        out
    }
}

fn merge_terms(terms: impl IntoIterator<Item = (f64, VarId)>) -> Vec<(f64, VarId)> {
    let mut out: Vec<(f64, VarId)> = Vec::new();
    let mut pos: HashMap<VarId, usize> = HashMap::new();
    for (c, v) in terms {
        match pos.get(&v) {
            Some(&k) => out[k].0 += c,
            None => {
                pos.insert(v, out.len());
                out.push((c, v));
            }
        }
    }
    out.retain(|(c, _)| *c != 0.0);
    out
}

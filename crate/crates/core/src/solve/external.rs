//! Runs an MPS-reading MILP solver as a subprocess.
//!
//! The command is a whitespace-separated template with placeholders
//! `{mps}` (model file), `{sol}` (solution file the solver must write),
//! `{time}` (time limit in seconds) and `{opts}` (an options file holding
//! [`ExternalSolver::options`]). The solution file is read with a
//! [`SolutionFormat`]: status regexes tried against the whole file and a
//! per-line regex with `name` and `value` groups.
//!
//! HiGHS and CBC are supported out of the box; [`ExternalSolver::detect`]
//! prefers HiGHS when both are installed.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use regex::Regex;

use super::mps::{column_index, export_mps};
use super::{order_walk, PlacementSolution, SolveStatus, SolverMeta};
use crate::error::SolveError;
use crate::ilp::{MilpModel, VarRef};
use crate::model::NodeId;
use crate::problem::PlacementProblem;

pub const DEFAULT_TIME_LIMIT_S: f64 = 600.0;
pub const CBC_TEMPLATE: &str = "cbc {mps} -sec {time} -ratioGap 0 -solve -solu {sol}";
pub const HIGHS_TEMPLATE: &str =
    "highs --model_file {mps} --solution_file {sol} --time_limit {time} --options_file {opts}";
/// Proven optimality; the default relative gap of 1e-4 is too loose for
/// comparing objectives at 1e-6.
pub const HIGHS_OPTIONS: &str = "mip_rel_gap = 0\n";

#[derive(Debug, Clone)]
pub struct SolutionFormat {
    /// First match wins.
    pub status_rules: Vec<(Regex, SolveStatus)>,
    pub objective: Regex,
    pub value_line: Regex,
}

impl SolutionFormat {
    /// CBC `-solu` output:
    ///
    /// ```text
    /// Optimal - objective value 3.00000000
    ///       0 X0000000              1                       0
    /// ```
    pub fn cbc() -> Self {
        let rule = |re: &str, s| (Regex::new(re).unwrap(), s);
        SolutionFormat {
            status_rules: vec![
                rule(r"(?m)^Optimal", SolveStatus::Optimal),
                rule(r"(?mi)^(Integer )?infeasible", SolveStatus::Infeasible),
                rule(r"(?m)^Stopped.*no integer solution", SolveStatus::Timeout),
                rule(r"(?m)^Stopped on time", SolveStatus::Feasible),
                rule(r"(?m)^Stopped", SolveStatus::Feasible),
            ],
            objective: Regex::new(r"objective value\s+(?P<value>[-+0-9.eE]+)").unwrap(),
            value_line: Regex::new(r"^\s*(?:\*\*\s*)?\d+\s+(?P<name>\S+)\s+(?P<value>[-+0-9.eE]+)").unwrap(),
        }
    }

    /// HiGHS raw solution file:
    ///
    /// ```text
    /// Model status
    /// Optimal
    ///
    /// # Primal solution values
    /// Feasible
    /// Objective 3
    /// # Columns 2
    /// X0000000 1
    /// ```
    pub fn highs() -> Self {
        let rule = |re: &str, s| (Regex::new(re).unwrap(), s);
        SolutionFormat {
            status_rules: vec![
                rule(r"(?m)^Optimal\s*$", SolveStatus::Optimal),
                rule(r"(?m)^(Infeasible|Primal infeasible or unbounded)\s*$", SolveStatus::Infeasible),
                rule(r"(?ms)^(Time|Iteration|Solution) limit reached\s*$.*^Feasible\s*$", SolveStatus::Feasible),
                rule(r"(?m)^(Time|Iteration|Solution) limit reached\s*$", SolveStatus::Timeout),
            ],
            objective: Regex::new(r"(?m)^Objective\s+(?P<value>[-+0-9.eE]+)").unwrap(),
            value_line: Regex::new(r"^(?P<name>X[0-9A-Z]{7})\s+(?P<value>[-+0-9.eE]+)\s*$").unwrap(),
        }
    }

    pub fn status(&self, text: &str) -> Option<SolveStatus> {
        self.status_rules.iter().find(|(re, _)| re.is_match(text)).map(|(_, s)| *s)
    }

    pub fn reported_objective(&self, text: &str) -> Option<f64> {
        self.objective.captures(text)?.name("value")?.as_str().parse().ok()
    }

    /// Column name → value for every line the value regex accepts.
    pub fn values(&self, text: &str) -> HashMap<String, f64> {
        text.lines()
            .filter_map(|line| {
                let c = self.value_line.captures(line)?;
                Some((c["name"].to_owned(), c["value"].parse().ok()?))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: String,
    pub format: SolutionFormat,
    pub time_limit_s: f64,
    /// Contents of the `{opts}` file.
    pub options: String,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>, format: SolutionFormat, time_limit_s: f64) -> Self {
        ExternalSolver { command: command.into(), format, time_limit_s, options: String::new() }
    }

    /// A user template; the solution format follows the program name
    /// (HiGHS if it contains `highs`, CBC otherwise).
    pub fn from_template(command: &str, time_limit_s: f64) -> Self {
        let program = command.split_whitespace().next().unwrap_or("");
        let name = Path::new(program).file_name().map(|n| n.to_string_lossy().to_lowercase()).unwrap_or_default();
        if name.contains("highs") {
            let mut s = Self::new(command, SolutionFormat::highs(), time_limit_s);
            s.options = HIGHS_OPTIONS.into();
            s
        } else {
            Self::new(command, SolutionFormat::cbc(), time_limit_s)
        }
    }

    pub fn highs(executable: &Path, time_limit_s: f64) -> Self {
        let cmd = HIGHS_TEMPLATE.replacen("highs", &executable.display().to_string(), 1);
        let mut s = Self::new(cmd, SolutionFormat::highs(), time_limit_s);
        s.options = HIGHS_OPTIONS.into();
        s
    }

    /// HiGHS if [`locate_highs`] finds it, otherwise CBC.
    pub fn detect(time_limit_s: f64) -> Result<Self, SolveError> {
        if let Some(exe) = locate_highs() {
            return Ok(Self::highs(&exe, time_limit_s));
        }
        if let Some(exe) = locate_cbc() {
            return Ok(Self::cbc(&exe, time_limit_s));
        }
        Err(SolveError::SolverNotFound(
            "no MILP solver found: install highs or cbc, or set VEPC_HIGHS / VEPC_CBC".into(),
        ))
    }

    pub fn cbc(executable: &Path, time_limit_s: f64) -> Self {
        let cmd = CBC_TEMPLATE.replacen("cbc", &executable.display().to_string(), 1);
        Self::new(cmd, SolutionFormat::cbc(), time_limit_s)
    }

    fn argv(&self, mps: &Path, sol: &Path, opts: &Path) -> Vec<String> {
        self.command
            .split_whitespace()
            .map(|tok| {
                tok.replace("{mps}", &mps.display().to_string())
                    .replace("{sol}", &sol.display().to_string())
                    .replace("{opts}", &opts.display().to_string())
                    .replace("{time}", &format!("{}", self.time_limit_s))
            })
            .collect()
    }

    /// Solves `model` and returns the solver's status, reported objective and
    /// one value per model column (missing columns read as zero).
    pub fn run_raw(&self, model: &MilpModel) -> Result<RawSolution, SolveError> {
        let argv = self.argv(Path::new("model.mps"), Path::new("model.sol"), Path::new("solver.opt"));
        let program = argv.first().ok_or_else(|| SolveError::SolverNotFound("empty command".into()))?;
        if resolve_executable(program).is_none() {
            return Err(SolveError::SolverNotFound(program.clone()));
        }
        let dir = tempfile::tempdir()?;
        let mps = dir.path().join("model.mps");
        let sol = dir.path().join("model.sol");
        let opts = dir.path().join("solver.opt");
        std::fs::write(&mps, export_mps(model).text)?;
        std::fs::write(&opts, &self.options)?;
        let argv = self.argv(&mps, &sol, &opts);

        let started = Instant::now();
        let output = Command::new(&argv[0]).args(&argv[1..]).current_dir(dir.path()).output()?;
        let wall_time_s = started.elapsed().as_secs_f64();
        if !output.status.success() {
            return Err(SolveError::SolverFailed {
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).chars().take(2000).collect(),
            });
        }
        let text = std::fs::read_to_string(&sol)
            .map_err(|e| SolveError::Unparsable(format!("solution file {}: {e}", sol.display())))?;
        let status = self
            .format
            .status(&text)
            .ok_or_else(|| SolveError::Unparsable(format!("no status in {:?}", text.lines().next())))?;
        let mut values = vec![0.0; model.num_vars()];
        for (name, v) in self.format.values(&text) {
            let k = column_index(&name)
                .filter(|&k| k < values.len())
                .ok_or_else(|| SolveError::Unparsable(format!("unknown column {name}")))?;
            values[k] = v;
        }
        Ok(RawSolution { status, objective: self.format.reported_objective(&text), values, wall_time_s })
    }
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Vec<f64>,
    pub wall_time_s: f64,
}

fn resolve_executable(program: &str) -> Option<PathBuf> {
    let p = Path::new(program);
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_owned());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|d| d.join(program))
            .find(|c| c.is_file())
    })
}

/// `VEPC_HIGHS`, then `highs` on `PATH`.
pub fn locate_highs() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("VEPC_HIGHS") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    resolve_executable("highs")
}

/// `VEPC_CBC`, then `cbc` on `PATH`, then the copy bundled with the PuLP
/// Python package.
pub fn locate_cbc() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("VEPC_CBC") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    if let Some(p) = resolve_executable("cbc") {
        return Some(p);
    }
    let arch = match std::env::consts::ARCH {
        "x86_64" => "i64",
        "aarch64" => "arm64",
        _ => return None,
    };
    let roots = ["/usr/local/lib", "/usr/lib"];
    for root in roots {
        let Ok(entries) = std::fs::read_dir(root) else { continue };
        for entry in entries.flatten() {
            let name = entry.file_name();
            if !name.to_string_lossy().starts_with("python3") {
                continue;
            }
            for site in ["dist-packages", "site-packages"] {
                let c = entry.path().join(site).join("pulp/solverdir/cbc/linux").join(arch).join("cbc");
                if c.is_file() {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Maps 0/1 column values back onto chain positions and routes.
pub fn solution_from_values(
    problem: &PlacementProblem,
    model: &MilpModel,
    values: &[f64],
    meta: SolverMeta,
) -> PlacementSolution {
    let on = |k: usize| values[k] > 0.5;
    let mut nodes: HashMap<(u32, usize), NodeId> = HashMap::new();
    let mut arcs: HashMap<(u32, usize), Vec<crate::model::ArcId>> = HashMap::new();
    for (k, var) in model.vars().iter().enumerate() {
        if !on(k) {
            continue;
        }
        match *var {
            VarRef::Place { chain, position, node, .. } => {
                nodes.entry((chain, position)).or_insert(node);
            }
            VarRef::Route { chain, segment, arc } => arcs.entry((chain, segment)).or_default().push(arc),
            VarRef::Loc { .. } | VarRef::NodeUsed { .. } => {}
        }
    }
    let mut per_chain_nodes = Vec::new();
    let mut per_chain_routes = Vec::new();
    for chain in &problem.chains {
        let chain_nodes: Vec<NodeId> = (1..=chain.len())
            .map(|i| nodes.get(&(chain.id, i)).copied().unwrap_or(NodeId(u32::MAX)))
            .collect();
        let routes = chain
            .segments()
            .map(|i| {
                let set = arcs.remove(&(chain.id, i)).unwrap_or_default();
                order_walk(&problem.topology, chain_nodes[i - 1], set)
            })
            .collect();
        per_chain_nodes.push(chain_nodes);
        per_chain_routes.push(routes);
    }
    let mut sol = PlacementSolution::assemble(problem, &per_chain_nodes, per_chain_routes, meta);
    // positions the solver left unplaced stay out; the verifier reports them
    sol.assignments.retain(|a| a.node != NodeId(u32::MAX));
    sol.locations.retain(|l| l.node != NodeId(u32::MAX));
    sol
}

/// Exports `model`, runs the solver and rebuilds a [`PlacementSolution`].
/// The objective is recomputed from the routes and must agree with the
/// solver's figure to 1e-6 relative.
pub fn run_external(
    problem: &PlacementProblem,
    model: &MilpModel,
    solver: &ExternalSolver,
) -> Result<PlacementSolution, SolveError> {
    let raw = solver.run_raw(model)?;
    let meta = SolverMeta { engine: "external".into(), status: raw.status, wall_time_s: raw.wall_time_s, gap: None };
    if !raw.status.has_solution() {
        return Ok(PlacementSolution::without_solution("external", raw.status, raw.wall_time_s));
    }
    let sol = solution_from_values(problem, model, &raw.values, meta);
    if let Some(reported) = raw.objective {
        let scale = reported.abs().max(sol.objective.abs()).max(1.0);
        if (reported - sol.objective).abs() > 1e-6 * scale {
            return Err(SolveError::ObjectiveMismatch { reported, recomputed: sol.objective });
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cbc_format_parses_statuses_and_values() {
        let f = SolutionFormat::cbc();
        let text = "Optimal - objective value 3.00000000\n      0 X0000000              1                       0\n      4 X0000004   0.99999999 0\n";
        assert_eq!(f.status(text), Some(SolveStatus::Optimal));
        assert_eq!(f.reported_objective(text), Some(3.0));
        let v = f.values(text);
        assert_eq!(v["X0000000"], 1.0);
        assert!(v["X0000004"] > 0.99);
        assert_eq!(f.status("Infeasible - objective value 0.00000000\n"), Some(SolveStatus::Infeasible));
        assert_eq!(f.status("Integer infeasible - objective value 0\n"), Some(SolveStatus::Infeasible));
        assert_eq!(
            f.status("Stopped on time (no integer solution - continuous used) - objective value 1\n"),
            Some(SolveStatus::Timeout)
        );
        assert_eq!(f.status("Stopped on time - objective value 12.5\n"), Some(SolveStatus::Feasible));
    }

    #[test]
    fn highs_format_parses_statuses_and_values() {
        let f = SolutionFormat::highs();
        let text = "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 3.5\n# Columns 2\nX0000000 1\nX0000001 0\n# Rows 1\nR0000000 1\n";
        assert_eq!(f.status(text), Some(SolveStatus::Optimal));
        assert_eq!(f.reported_objective(text), Some(3.5));
        let v = f.values(text);
        assert_eq!(v.len(), 2);
        assert_eq!(v["X0000000"], 1.0);
        assert_eq!(f.status("Model status\nInfeasible\n\n# Primal solution values\nNone\n"), Some(SolveStatus::Infeasible));
        assert_eq!(
            f.status("Model status\nTime limit reached\n\n# Primal solution values\nFeasible\nObjective 2\n"),
            Some(SolveStatus::Feasible)
        );
        assert_eq!(
            f.status("Model status\nTime limit reached\n\n# Primal solution values\nNone\n"),
            Some(SolveStatus::Timeout)
        );
    }

    #[test]
    fn template_picks_format_from_program() {
        let s = ExternalSolver::from_template("/opt/bin/highs --model_file {mps} --solution_file {sol}", 5.0);
        assert!(s.format.value_line.is_match("X0000001 1"));
        assert_eq!(s.options, HIGHS_OPTIONS);
        let s = ExternalSolver::from_template("cbc {mps} -solve -solu {sol}", 5.0);
        assert!(s.options.is_empty());
    }

    #[test]
    fn missing_executable_is_reported() {
        let s = ExternalSolver::new("/nonexistent/solver {mps} {sol}", SolutionFormat::cbc(), 1.0);
        let err = s.run_raw(&MilpModel::new()).unwrap_err();
        assert!(matches!(err, SolveError::SolverNotFound(_)));
        let s = ExternalSolver::new("definitely-not-a-solver-xyz {mps}", SolutionFormat::cbc(), 1.0);
        assert!(matches!(s.run_raw(&MilpModel::new()), Err(SolveError::SolverNotFound(_))));
    }
}

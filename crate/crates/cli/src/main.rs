//! `vepc`: validate inputs, solve placements, run replica sweeps and check
//! solutions.
//!
//! Exit codes: 0 success, 1 invalid input, 2 infeasible, 3 solver failure,
//! 4 verification failure, 5 input file missing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::Value;

use vepc_core::chains::TemplateSet;
use vepc_core::experiments::{emit_results, run_sweep, EmitOptions, ReplicaLimits, Scenario, SweepKind, SweepRunner, SweepSpec};
use vepc_core::model::{AppCatalog, Topology, VnfCatalog};
use vepc_core::solve::{export_mps, solve, Engine, PlacementSolution, SolveStatus};
use vepc_core::verify::check_solution;
use vepc_core::{ChainError, ExperimentError, ModelError, PlacementProblem, SolveError};

const INVALID: u8 = 1;
const INFEASIBLE: u8 = 2;
const SOLVER: u8 = 3;
const VERIFY: u8 = 4;
const MISSING: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "vepc", version, about = "Place virtual EPC functions and route service chains over a metro network")]
#[command(after_help = "Exit codes: 0 ok, 1 invalid input, 2 infeasible, 3 solver failure, 4 verification failure, 5 missing file")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check topology, catalog, template and scenario files.
    Validate {
        /// Files to check; the kind is recognised from the content.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Build, solve and verify one scenario instance.
    Solve {
        #[command(flatten)]
        input: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for problem.json, solution.json and report.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Replica sweep: fig4b varies R_f for all functions, fig4c per function.
    Sweep {
        /// fig4b or fig4c.
        kind: SweepKind,
        #[command(flatten)]
        input: ScenarioArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Seeds per configuration.
        #[arg(long, default_value_t = 10)]
        iterations: u32,
        /// Parallel solves (0 = one per CPU).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Leave the wall_time column empty so reruns give identical files.
        #[arg(long)]
        no_timing: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a solution against a scenario (or a problem.json written by `solve`).
    Verify {
        /// Scenario file or problem.json.
        problem: PathBuf,
        solution: PathBuf,
        /// Seed and limits used to regenerate flows from a scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Replica limits the solution was computed under
        #[arg(long)]
        replicas: Option<ReplicaLimits>,
        /// The solution came from the reduced scenario
        #[arg(long)]
        quick: bool,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the integer program of one scenario instance as fixed MPS.
    ExportMps {
        #[command(flatten)]
        input: ScenarioArgs,
        #[arg(long, default_value = "model.mps")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario file; the bundled 19-node metro scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Flow seed (default: the scenario's seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Replica limits, e.g. `2`, `all=3`, `MME=1,rest=2`.
    #[arg(long)]
    replicas: Option<ReplicaLimits>,
    /// One fifth of the flows and of the total traffic
    #[arg(long)]
    quick: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// external (HiGHS or CBC subprocess), exhaustive (tiny instances) or greedy.
    #[arg(long)]
    engine: Option<Engine>,
    /// Solver command template with {mps}, {sol}, {time} and {opts} placeholders.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Seconds per solve (default 600).
    #[arg(long)]
    time_limit: Option<f64>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }
}

type Outcome = Result<(), Failure>;

fn is_missing(e: &ModelError) -> bool {
    matches!(e, ModelError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
}

fn model_code(e: &ModelError) -> u8 {
    if is_missing(e) {
        MISSING
    } else {
        INVALID
    }
}

fn solve_code(e: &SolveError) -> u8 {
    match e {
        SolveError::Ilp(_) => INVALID,
        _ => SOLVER,
    }
}

fn chain_code(e: &ChainError) -> u8 {
    match e {
        ChainError::Model(m) => model_code(m),
        _ => INVALID,
    }
}

fn experiment_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Model(m) => model_code(m),
        ExperimentError::Chain(c) => chain_code(c),
        ExperimentError::Solve(s) => solve_code(s),
        ExperimentError::Output { .. } | ExperimentError::Csv(_) | ExperimentError::Invalid(_) => INVALID,
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::new(experiment_code(&e), e)
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        Failure::new(solve_code(&e), e)
    }
}

fn load_scenario(input: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut scenario = match &input.scenario {
        Some(path) => Scenario::load(path)?,
        None => Scenario::metro_default(),
    };
    if input.quick {
        scenario = scenario.quick();
    }
    if let Some(limits) = &input.replicas {
        scenario = scenario.with_replicas(limits);
    }
    if let Some(seed) = input.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn apply_solver_args(scenario: &mut Scenario, args: &SolverArgs) {
    if let Some(engine) = args.engine {
        scenario.solver.engine = engine;
    }
    if let Some(cmd) = &args.solver_cmd {
        scenario.solver.solver_cmd = Some(cmd.clone());
    }
    if let Some(t) = args.time_limit {
        scenario.solver.time_limit_s = t;
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(|e| Failure::new(INVALID, e))
}

fn create_dir(path: &Path) -> Outcome {
    std::fs::create_dir_all(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(|e| Failure::new(INVALID, e))
}

/// Recognises a JSON input by its shape and loads it with the matching loader.
fn validate_one(path: &Path) -> Result<&'static str, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        let e = ModelError::Io { path: path.to_owned(), source };
        Failure::new(model_code(&e), e)
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::new(INVALID, ModelError::from(e)))?;
    let first = value.as_array().and_then(|a| a.first());
    let has = |v: Option<&Value>, key: &str| v.and_then(|v| v.get(key)).is_some();
    let invalid = |e: anyhow::Error| Failure::new(INVALID, e);
    if has(Some(&value), "nas_flows") {
        let scenario = Scenario::load(path)?;
        scenario.validate()?;
        Ok("scenario")
    } else if has(Some(&value), "chains") {
        PlacementProblem::from_json(&text).map_err(|e| invalid(e.into()))?;
        Ok("problem")
    } else if has(Some(&value), "links") {
        Topology::from_json(&text).map_err(|e| Failure::new(model_code(&e), e))?;
        Ok("topology")
    } else if has(first, "sequence") || has(first, "procedure") {
        TemplateSet::from_json(&text).map_err(|e| invalid(e.into()))?;
        Ok("templates")
    } else if has(first, "traffic_share") {
        let apps: AppCatalog = serde_json::from_str(&text).map_err(|e| invalid(e.into()))?;
        if let Some(bad) = apps.apps.iter().find(|a| a.traffic_share < 0.0) {
            return Err(invalid(anyhow::anyhow!("negative traffic share for {}", bad.name)));
        }
        let total: f64 = apps.apps.iter().map(|a| a.traffic_share).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(anyhow::anyhow!("traffic shares sum to {total}, expected 1")));
        }
        Ok("applications")
    } else if has(first, "cores_per_gbps") {
        VnfCatalog::load(path).map_err(|e| Failure::new(model_code(&e), e))?;
        Ok("vnfs")
    } else {
        Err(invalid(anyhow::anyhow!("unrecognised file layout")))
    }
}

fn cmd_validate(paths: &[PathBuf]) -> Outcome {
    let mut code = 0;
    let mut failed = 0;
    for path in paths {
        match validate_one(path) {
            Ok(kind) => println!("ok     {} ({kind})", path.display()),
            Err(f) => {
                println!("error  {}: {:#}", path.display(), f.error);
                failed += 1;
                code = code.max(f.code);
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::new(code, anyhow::anyhow!("{failed} of {} files invalid", paths.len())))
    }
}

fn status_outcome(solution: &PlacementSolution) -> Outcome {
    match solution.meta.status {
        SolveStatus::Infeasible => Err(Failure::new(INFEASIBLE, anyhow::anyhow!("instance is infeasible"))),
        SolveStatus::Timeout => Err(Failure::new(SOLVER, anyhow::anyhow!("time limit reached without a solution"))),
        SolveStatus::NotFound => Err(Failure::new(SOLVER, anyhow::anyhow!("heuristic found no feasible solution"))),
        SolveStatus::Optimal | SolveStatus::Feasible => Ok(()),
    }
}

fn cmd_solve(input: &ScenarioArgs, solver: &SolverArgs, out: &Path) -> Outcome {
    let mut scenario = load_scenario(input)?;
    apply_solver_args(&mut scenario, solver);
    let problem = scenario.instantiate(scenario.seed)?;
    info!(
        "{} chains, {} positions, engine {}",
        problem.chains.len(),
        problem.position_count(),
        scenario.solver.engine
    );
    let config = scenario.solver.solver_config()?;
    let solution = solve(&problem, &config)?;
    create_dir(out)?;
    write_file(&out.join("problem.json"), &problem.to_json())?;
    println!("status     {}", solution.meta.status);
    println!("wall time  {:.3} s", solution.meta.wall_time_s);
    status_outcome(&solution)?;
    write_file(&out.join("solution.json"), &solution.to_json())?;
    let report = check_solution(&problem, &solution);
    write_file(&out.join("report.json"), &report.to_json())?;
    println!("objective  {:.6} Gbps", solution.objective);
    println!("{report}");
    if !report.passed() {
        return Err(Failure::new(VERIFY, anyhow::anyhow!("{} violations", report.violations.len())));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    kind: SweepKind,
    input: &ScenarioArgs,
    solver: &SolverArgs,
    iterations: u32,
    jobs: usize,
    no_timing: bool,
    out: &Path,
) -> Outcome {
    if input.replicas.is_some() {
        return Err(Failure::new(INVALID, anyhow::anyhow!("--replicas conflicts with a replica sweep")));
    }
    let mut scenario = load_scenario(input)?;
    apply_solver_args(&mut scenario, solver);
    let spec = SweepSpec::for_kind(kind, iterations, scenario.seed);
    let runner = SweepRunner { solver: scenario.solver.solver_config()?, jobs };
    let result = run_sweep(&scenario, &spec, &runner)?;
    let files = emit_results(&result, out, EmitOptions { timing: !no_timing })?;
    println!("{:<18} {:>6} {:>14} {:>12}", "config", "solved", "mean Gbps", "std");
    for s in &result.summary {
        let num = |x: Option<f64>, w: usize| x.map_or_else(|| format!("{:>w$}", "-"), |v| format!("{v:>w$.3}"));
        println!("{:<18} {:>3}/{:<2} {} {}", s.config, s.solved, s.iterations, num(s.mean, 14), num(s.std, 12));
    }
    for flag in &result.audit {
        println!(
            "monotonicity: seed {} {} = {:.3} < {} = {:.3}",
            flag.seed, flag.tighter, flag.tighter_objective, flag.looser, flag.looser_objective
        );
    }
    println!("wrote {}, {}, {}", files.iterations.display(), files.summary.display(), files.plot.display());
    if result.records.iter().any(|r| r.status == "rejected") {
        return Err(Failure::new(VERIFY, anyhow::anyhow!("some solutions failed verification")));
    }
    Ok(())
}

fn cmd_verify(
    problem_path: &Path,
    solution_path: &Path,
    seed: Option<u64>,
    replicas: Option<ReplicaLimits>,
    quick: bool,
    report_path: Option<&Path>,
) -> Outcome {
    let text = std::fs::read_to_string(problem_path).map_err(|source| {
        let e = ModelError::Io { path: problem_path.to_owned(), source };
        Failure::new(model_code(&e), e)
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::new(INVALID, ModelError::from(e)))?;
    let problem = if value.get("chains").is_some() {
        PlacementProblem::from_json(&text).map_err(|e| Failure::new(chain_code(&e), e))?
    } else {
        let input = ScenarioArgs { scenario: Some(problem_path.to_owned()), seed, replicas, quick };
        let scenario = load_scenario(&input)?;
        scenario.instantiate(scenario.seed)?
    };
    let sol_text = std::fs::read_to_string(solution_path).map_err(|source| {
        let e = ModelError::Io { path: solution_path.to_owned(), source };
        Failure::new(model_code(&e), e)
    })?;
    let solution: PlacementSolution = serde_json::from_str(&sol_text)
        .with_context(|| format!("cannot parse {}", solution_path.display()))
        .map_err(|e| Failure::new(INVALID, e))?;
    let report = check_solution(&problem, &solution);
    println!("{report}");
    if let Some(path) = report_path {
        write_file(path, &report.to_json())?;
    }
    if report.passed() {
        Ok(())
    } else {
        let families: Vec<&str> = report.families().iter().map(|f| f.as_str()).collect();
        Err(Failure::new(VERIFY, anyhow::anyhow!("violations in {}", families.join(", "))))
    }
}

fn cmd_export(input: &ScenarioArgs, out: &Path) -> Outcome {
    let scenario = load_scenario(input)?;
    let problem = scenario.instantiate(scenario.seed)?;
    let model = vepc_core::ilp::build_model(&problem).map_err(|e| Failure::new(INVALID, e))?;
    let doc = export_mps(&model);
    write_file(out, &doc.text)?;
    println!("wrote {} ({} columns, {} rows)", out.display(), doc.columns, doc.rows);
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { paths } => cmd_validate(&paths),
        Command::Solve { input, solver, out } => cmd_solve(&input, &solver, &out),
        Command::Sweep { kind, input, solver, iterations, jobs, no_timing, out } => {
            cmd_sweep(kind, &input, &solver, iterations, jobs, no_timing, &out)
        }
        Command::Verify { problem, solution, seed, replicas, quick, report } => {
            cmd_verify(&problem, &solution, seed, replicas, quick, report.as_deref())
        }
        Command::ExportMps { input, out } => cmd_export(&input, &out),
    }
}

fn main() -> ExitCode {
    // clap's own usage errors would exit 2, which means "infeasible" here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(INVALID);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

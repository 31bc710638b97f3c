use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::SweepResult;
use crate::error::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    /// Write solver wall time; off leaves the column empty so repeated runs
    /// produce identical files.
    pub timing: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub iterations: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

#[derive(Serialize)]
struct PlotPoint<'a> {
    x: &'a str,
    mean: Option<f64>,
    std: Option<f64>,
    solved: u32,
    iterations: u32,
}

#[derive(Serialize)]
struct PlotData<'a> {
    figure: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    points: Vec<PlotPoint<'a>>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn output_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Output { path: path.to_owned(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> ExperimentError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => ExperimentError::Output { path: path.to_owned(), source },
        other => ExperimentError::Invalid(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `<name>_iterations.csv`, `<name>_summary.csv` and `<name>_plot.json`
/// into `out_dir`, creating it if needed.
pub fn emit_results(sweep: &SweepResult, out_dir: &Path, options: EmitOptions) -> Result<EmittedFiles, ExperimentError> {
    std::fs::create_dir_all(out_dir).map_err(output_err(out_dir))?;
    let name = sweep.kind.name();
    let files = EmittedFiles {
        iterations: out_dir.join(format!("{name}_iterations.csv")),
        summary: out_dir.join(format!("{name}_summary.csv")),
        plot: out_dir.join(format!("{name}_plot.json")),
    };

    let path = &files.iterations;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["config", "iteration", "seed", "objective", "status", "wall_time"]).map_err(|e| csv_err(path, e))?;
    for r in &sweep.records {
        let wall = if options.timing { format!("{:.3}", r.wall_time_s) } else { String::new() };
        w.write_record([
            r.config.clone(),
            r.iteration.to_string(),
            r.seed.to_string(),
            fmt_opt(r.objective),
            r.status.clone(),
            wall,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(output_err(path))?;

    let path = &files.summary;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["config", "iterations", "solved", "mean", "std"]).map_err(|e| csv_err(path, e))?;
    for s in &sweep.summary {
        w.write_record([s.config.clone(), s.iterations.to_string(), s.solved.to_string(), fmt_opt(s.mean), fmt_opt(s.std)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(output_err(path))?;

    let plot = PlotData {
        figure: name,
        x_label: sweep.kind.x_label(),
        y_label: "Bandwidth consumption (Gbps)",
        points: sweep
            .summary
            .iter()
            .map(|s| PlotPoint { x: &s.config, mean: s.mean, std: s.std, solved: s.solved, iterations: s.iterations })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&plot).expect("plot data serializes");
    std::fs::write(&files.plot, text + "\n").map_err(output_err(&files.plot))?;
    Ok(files)
}

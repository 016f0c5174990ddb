//! Config-driven experiment runs and their on-disk artifacts.
//!
//! A run directory contains:
//!
//! | file              | contents                                                        |
//! |-------------------|-----------------------------------------------------------------|
//! | `config.json`     | the fully resolved config; reloading it reproduces the run      |
//! | `history.csv`     | one row per epoch, streamed and flushed as training proceeds    |
//! | `params.bin`      | final parameters, little-endian `f64`                           |
//! | `best_params.bin` | parameters at the best validated epoch                          |
//! | `params.json`     | architecture header shared by both blobs                        |
//! | `summary.json`    | errors, parameter count, wall time and config hash              |
//! | `exact.csv`       | reference solution on the evaluation grid                       |
//! | `pred.csv`        | best-epoch prediction on the same grid                          |
//! | `abs_error.csv`   | pointwise `|pred − exact|`                                       |
//!
//! History columns, in order: `epoch, loss_r, loss_ic, loss_bc, total,
//! lambda_r, lambda_ic, lambda_bc, gamma, log_sigma_r, log_sigma_ic,
//! log_sigma_bc, val_l2`. Cells that do not apply (a task the problem lacks,
//! `gamma` and `log_sigma_*` under fixed weights, `val_l2` between
//! evaluations) are empty. Grid files have columns `<axis0>, <axis1>, value`
//! with axis 0 varying slowest. Every float is written with 17 significant
//! digits so that text round-trips are exact.

mod check;
mod config;

use std::fmt::Write;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::approximator::{save_params, ModelKind, Network, ParamsHeader};
use crate::dbaw::{Task, TaskMap};
use crate::error::{Error, Result};
use crate::pde::{ProblemDef, ProblemKind, DEFAULT_HERMITE_NODES};
use crate::trainer::{train, EpochRecord};

pub use check::{self_check, CheckOutcome};
pub use config::{
    default_label, default_widths, load_config, load_with_overrides, ExperimentConfig, WeightingKind,
    CONFIG_KEYS, OUTPUT_ROOT_ENV,
};

/// Column names of `history.csv`.
pub const HISTORY_HEADER: [&str; 13] = [
    "epoch",
    "loss_r",
    "loss_ic",
    "loss_bc",
    "total",
    "lambda_r",
    "lambda_ic",
    "lambda_bc",
    "gamma",
    "log_sigma_r",
    "log_sigma_ic",
    "log_sigma_bc",
    "val_l2",
];

/// Output root from [`OUTPUT_ROOT_ENV`], or the current directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Shortest exact text form used in every CSV file.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn task_cells(map: &TaskMap<f64>) -> impl Iterator<Item = String> + '_ {
    Task::ALL.into_iter().map(|t| opt(map.get(t).copied()))
}

/// CSV cells of one history row, in [`HISTORY_HEADER`] order.
pub fn history_row(row: &EpochRecord) -> Vec<String> {
    let mut out = Vec::with_capacity(HISTORY_HEADER.len());
    out.push(row.epoch.to_string());
    out.extend(task_cells(&row.losses));
    out.push(fmt_f64(row.total));
    out.extend(task_cells(&row.lambdas));
    out.push(opt(row.gamma));
    out.extend(task_cells(&row.log_sigma));
    out.push(opt(row.val_l2));
    out
}

/// Written to `summary.json` at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub problem: ProblemKind,
    pub model: ModelKind,
    pub weighting: WeightingKind,
    pub seed: u64,
    pub epochs: usize,
    pub param_count: usize,
    pub final_l2: f64,
    pub best_l2: f64,
    pub best_epoch: usize,
    pub wall_time_s: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

/// [`run_experiment_with`] without a progress callback.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<RunOutcome> {
    run_experiment_with(config, root, |_| {})
}

/// Trains according to `config` and writes every artifact into
/// `config.run_dir(root)`. `progress` sees each history row after it has
/// been flushed to disk.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    root: &Path,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<RunOutcome> {
    let config = config.clone().resolve()?;
    let dir = config.run_dir(root);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.json"), config.to_json())?;

    let problem = config.problem_def();
    let arch = config.architecture();
    let mut net = Network::seeded(&arch, config.seed)?;
    let weighting = config.weighting()?;
    let train_cfg = config.train_config();

    let mut history = csv::Writer::from_path(dir.join("history.csv"))?;
    history.write_record(HISTORY_HEADER)?;
    history.flush()?;
    let start = Instant::now();
    let record = train(&problem, &mut net, &weighting, &train_cfg, |row| {
        history.write_record(history_row(row))?;
        history.flush()?;
        progress(row);
        Ok(())
    })?;
    let wall = start.elapsed().as_secs_f64();
    drop(history);

    let header = ParamsHeader {
        arch: arch.clone(),
        seed: config.seed,
        param_count: net.param_count(),
    };
    save_params(&net, &header, &dir.join("params.bin"), &dir.join("params.json"))?;
    let mut best = net.clone();
    best.params_mut().copy_from_slice(&record.best_params);
    save_params(
        &best,
        &header,
        &dir.join("best_params.bin"),
        &dir.join("params.json"),
    )?;

    let shape = train_cfg.eval_grid;
    let points = problem.grid_points(shape);
    let exact = reference_values(&problem, shape, None)?;
    let pred: Vec<f64> = points.iter().map(|&p| best.eval(p)).collect();
    let err: Vec<f64> = pred.iter().zip(&exact).map(|(p, e)| (p - e).abs()).collect();
    let axes = problem.axis_names();
    write_grid(&dir.join("exact.csv"), axes, &points, &exact)?;
    write_grid(&dir.join("pred.csv"), axes, &points, &pred)?;
    write_grid(&dir.join("abs_error.csv"), axes, &points, &err)?;

    let summary = RunSummary {
        label: config.label(),
        problem: config.problem,
        model: config.model,
        weighting: config.weighting,
        seed: config.seed,
        epochs: config.epochs,
        param_count: net.param_count(),
        final_l2: record.final_l2,
        best_l2: record.best_l2,
        best_epoch: record.best_epoch,
        wall_time_s: wall,
        config_hash: config.content_hash(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(RunOutcome { dir, summary })
}

/// Writes `axis0, axis1, value` rows.
pub fn write_grid(path: &Path, axes: [&str; 2], points: &[[f64; 2]], values: &[f64]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} grid points but {} values",
            points.len(),
            values.len()
        )));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([axes[0], axes[1], "value"])?;
    for (p, v) in points.iter().zip(values) {
        w.write_record([fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::ShapeMismatch(format!("bad grid row {:?}", rec.position())))
        };
        points.push([field(0)?, field(1)?]);
        values.push(field(2)?);
    }
    Ok((points, values))
}

/// Cache file for a Burgers reference grid.
fn burgers_cache_name(nu: f64, shape: [usize; 2]) -> String {
    format!(
        "burgers_nu{}_{}x{}_gh{}.csv",
        fmt_f64(nu),
        shape[0],
        shape[1],
        DEFAULT_HERMITE_NODES
    )
}

/// Reference solution values on the evaluation grid of `shape`.
///
/// Burgers values come from the Cole–Hopf quadrature; with a `cache_dir`
/// they are read from (or written to) a cache file keyed by viscosity and
/// grid shape, and a cache whose coordinates do not match the grid is
/// recomputed.
pub fn reference_values(
    problem: &ProblemDef,
    shape: [usize; 2],
    cache_dir: Option<&Path>,
) -> Result<Vec<f64>> {
    let points = problem.grid_points(shape);
    let compute = || points.iter().map(|&p| problem.solution(p)).collect::<Vec<_>>();
    let (Some(dir), ProblemKind::Burgers) = (cache_dir, problem.kind) else {
        return Ok(compute());
    };
    let path = dir.join(burgers_cache_name(problem.nu, shape));
    if path.exists() {
        if let Ok((cached_points, values)) = read_grid(&path) {
            if cached_points == points {
                return Ok(values);
            }
        }
    }
    let values = compute();
    fs::create_dir_all(dir)?;
    write_grid(&path, problem.axis_names(), &points, &values)?;
    Ok(values)
}

/// Writes the ground-truth grid used for validation to `path`.
pub fn export_reference(
    problem: &ProblemDef,
    shape: [usize; 2],
    path: &Path,
    cache_dir: Option<&Path>,
) -> Result<usize> {
    let points = problem.grid_points(shape);
    let values = reference_values(problem, shape, cache_dir)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_grid(path, problem.axis_names(), &points, &values)?;
    Ok(points.len())
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub param_count: usize,
    pub best_l2: f64,
    pub best_epoch: usize,
    pub final_l2: f64,
    pub run_dir: PathBuf,
}

/// Runs each config in turn and tabulates the outcomes, best error first.
/// All configs must target the same problem and evaluation grid.
pub fn compare(configs: &[ExperimentConfig], root: &Path) -> Result<Vec<CompareRow>> {
    let resolved = configs
        .iter()
        .map(|c| c.clone().resolve())
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = resolved.first() else {
        return Err(Error::InvalidSize("compare needs at least one config".into()));
    };
    for c in &resolved[1..] {
        if c.problem != first.problem || c.eval_grid != first.eval_grid {
            return Err(Error::MismatchedProblem(format!(
                "{} on {:?} vs {} on {:?}",
                first.problem,
                first.eval_grid.unwrap_or_default(),
                c.problem,
                c.eval_grid.unwrap_or_default()
            )));
        }
    }
    let mut rows = Vec::with_capacity(resolved.len());
    for c in &resolved {
        let out = run_experiment(c, root)?;
        rows.push(CompareRow {
            label: out.summary.label,
            param_count: out.summary.param_count,
            best_l2: out.summary.best_l2,
            best_epoch: out.summary.best_epoch,
            final_l2: out.summary.final_l2,
            run_dir: out.dir,
        });
    }
    rows.sort_by(|a, b| {
        a.best_l2
            .total_cmp(&b.best_l2)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(rows)
}

/// Writes comparison rows as CSV (`method, param_count, best_l2,
/// best_epoch, final_l2, run_dir`).
pub fn write_comparison(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "method",
        "param_count",
        "best_l2",
        "best_epoch",
        "final_l2",
        "run_dir",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.param_count.to_string(),
            fmt_f64(r.best_l2),
            r.best_epoch.to_string(),
            fmt_f64(r.final_l2),
            r.run_dir.display().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width console rendering of a comparison table.
pub fn format_comparison(rows: &[CompareRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>12}  {:>10}",
        "method", "params", "best rel L2", "best epoch"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>12.4e}  {:>10}",
            r.label, r.param_count, r.best_l2, r.best_epoch
        );
    }
    out
}

//! `pikan` — train, compare and inspect physics-informed KAN/MLP runs.
//!
//! Usage:
//!     pikan [--root DIR] train [CONFIG] [--key value ...]
//!     pikan [--root DIR] compare CONFIG... [--out FILE]
//!     pikan export-reference --problem NAME [--grid NxM] --out FILE
//!     pikan check
//!
//! Every config key can be overridden on the `train` command line, with
//! dashes or underscores (`--lr-theta 1e-3`, `--eval_grid [64,64]`).
//! Run directories land under `--root`, else `$PIKAN_OUTPUT_ROOT`, else the
//! current directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pikan::experiment::{
    compare, export_reference, format_comparison, load_config, load_with_overrides, output_root,
    run_experiment_with, self_check, write_comparison, ExperimentConfig,
};
use pikan::pde::{ProblemDef, ProblemKind};

#[derive(Parser)]
#[command(name = "pikan", version)]
#[command(about = "Physics-informed KAN/MLP experiment runner")]
struct Args {
    /// Directory under which run directories are created
    #[arg(long, global = true)]
    root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its run directory
    Train {
        /// Optional config file followed by `--key value` overrides
        #[arg(
            allow_hyphen_values = true,
            trailing_var_arg = true,
            value_name = "CONFIG | --KEY VALUE"
        )]
        args: Vec<String>,

        /// Only print the final summary
        #[arg(long, short)]
        quiet: bool,
    },
    /// Train several configurations of one problem and tabulate them
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,

        /// Comparison CSV (default: <root>/comparison.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the ground-truth grid of a problem
    ExportReference {
        /// klein_gordon (kg), burgers or helmholtz
        #[arg(long)]
        problem: String,

        /// Grid shape as NxM (default: the problem's evaluation grid)
        #[arg(long)]
        grid: Option<String>,

        #[arg(long)]
        out: PathBuf,

        /// Cache directory for Burgers quadrature values
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run the numerical self-checks
    Check,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<ExitCode> {
    let root = args.root.unwrap_or_else(output_root);
    match args.command {
        Command::Train { args, quiet } => train(&root, &args, quiet),
        Command::Compare { configs, out } => compare_cmd(&root, &configs, out),
        Command::ExportReference {
            problem,
            grid,
            out,
            cache,
        } => {
            let kind =
                ProblemKind::parse(&problem).with_context(|| format!("unknown problem `{problem}`"))?;
            let shape = match grid {
                Some(g) => parse_grid(&g)?,
                None => ExperimentConfig::new(kind)
                    .resolve()?
                    .eval_grid
                    .expect("resolved grid"),
            };
            let rows = export_reference(&ProblemDef::from_kind(kind), shape, &out, cache.as_deref())
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {rows} rows to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let outcomes = self_check();
            for c in &outcomes {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if outcomes.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn train(root: &Path, args: &[String], quiet: bool) -> Result<ExitCode> {
    let (config_path, overrides) = split_train_args(args)?;
    let config =
        load_with_overrides(config_path.as_deref(), &overrides).with_context(|| match &config_path {
            Some(p) => format!("loading {}", p.display()),
            None => "building config from flags".to_string(),
        })?;
    let epochs = config.epochs;
    let outcome = run_experiment_with(&config, root, |row| {
        if let (false, Some(l2)) = (quiet, row.val_l2) {
            eprintln!(
                "epoch {:>6}/{epochs}  total {:.4e}  rel-L2 {:.4e}",
                row.epoch, row.total, l2
            );
        }
    })?;
    let s = &outcome.summary;
    println!(
        "{}: best rel-L2 {:.4e} at epoch {}, final {:.4e}, {} params, {:.1}s -> {}",
        s.label,
        s.best_l2,
        s.best_epoch,
        s.final_l2,
        s.param_count,
        s.wall_time_s,
        outcome.dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

type Overrides = Vec<(String, String)>;

/// Splits `[CONFIG] --key value --key=value ...`.
fn split_train_args(args: &[String]) -> Result<(Option<PathBuf>, Overrides)> {
    let mut it = args.iter().peekable();
    let config = match it.peek() {
        Some(first) if !first.starts_with("--") => Some(PathBuf::from(it.next().unwrap())),
        _ => None,
    };
    let mut overrides = Vec::new();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            bail!("expected `--key value`, found `{flag}`");
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = it
                    .next()
                    .with_context(|| format!("missing value for `--{key}`"))?;
                (key.to_string(), value.clone())
            }
        };
        overrides.push((key, value));
    }
    Ok((config, overrides))
}

fn parse_grid(s: &str) -> Result<[usize; 2]> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("grid `{s}` is not of the form NxM"))?;
    Ok([a.trim().parse()?, b.trim().parse()?])
}

fn compare_cmd(root: &Path, paths: &[PathBuf], out: Option<PathBuf>) -> Result<ExitCode> {
    let configs = paths
        .iter()
        .map(|p| load_config(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let rows = compare(&configs, root)?;
    print!("{}", format_comparison(&rows));
    let out = out.unwrap_or_else(|| root.join("comparison.csv"));
    write_comparison(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
    println!("table written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

//! Command-line experiment runner.
//!
//! `aqc <experiment> --config <file> [--out <dir>] [--seed N]` runs one
//! experiment and writes `report.json`, one CSV per table and binary fields
//! into the output directory. `aqc report_render <report.json>` prints a
//! report as text and writes plot-ready CSVs.

pub mod config;
pub mod experiments;
pub mod render;
pub mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use aqc_core::fieldlab::write_field;
use clap::{Args, Parser, Subcommand};

use config::{Experiment, ExperimentConfig};
use report::{Report, REPORT_SCHEMA_VERSION};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "AQC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "aqc", version, about = "Experiments on Orlicz-growth functionals of differential operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[command(rename_all = "snake_case")]
pub enum Command {
    /// Symbol analysis of an operator.
    OpCheck(RunArgs),
    /// Korn-type constants, or the staircase blow-up for non-elliptic operators.
    Korn(RunArgs),
    /// Poincaré ratios over random compactly supported fields.
    Poincare(RunArgs),
    /// Hardy-type conditions for a pair of Young functions.
    Hardy(RunArgs),
    /// Rearrangement bound for a Fourier multiplier.
    Bagby(RunArgs),
    /// Quasiconvexity equivalence and comparison scans.
    QcScan(RunArgs),
    /// Direct-method minimization.
    Minimize(RunArgs),
    /// Kernel perturbation of a minimizer for a non-elliptic operator.
    NonellipticDemo(RunArgs),
    /// Excess-based regularity diagnostics under refinement.
    Excess(RunArgs),
    /// Render a report as a text table and plot-data CSVs.
    ReportRender(RenderArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed; overrides `seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub report: PathBuf,
    /// Directory for the plot CSVs; defaults to the report's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn experiment(&self) -> Option<(Experiment, &RunArgs)> {
        Some(match self {
            Command::OpCheck(a) => (Experiment::OpCheck, a),
            Command::Korn(a) => (Experiment::Korn, a),
            Command::Poincare(a) => (Experiment::Poincare, a),
            Command::Hardy(a) => (Experiment::Hardy, a),
            Command::Bagby(a) => (Experiment::Bagby, a),
            Command::QcScan(a) => (Experiment::QcScan, a),
            Command::Minimize(a) => (Experiment::Minimize, a),
            Command::NonellipticDemo(a) => (Experiment::NonellipticDemo, a),
            Command::Excess(a) => (Experiment::Excess, a),
            Command::ReportRender(_) => return None,
        })
    }
}

/// Configures the global thread pool from [`THREADS_ENV`].
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).with_context(|| {
        format!("{THREADS_ENV} must be a positive integer, got '{raw}'")
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure the thread pool")?;
    Ok(())
}

/// Runs one experiment and writes its artifacts; returns the report.
pub fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<Report> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(named) = cfg.experiment {
        if named != experiment {
            bail!("config is for experiment '{}', not '{}'", named.name(), experiment.name());
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = match (&args.out, &cfg.output_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => cfg.resolve(d),
        (None, None) => PathBuf::from("aqc-out"),
    };
    let outcome = experiments::run(experiment, &cfg)?;
    std::fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut artifacts = Vec::new();
    for (name, table) in &outcome.tables {
        let file = format!("{name}.csv");
        table.write_csv(&out_dir.join(&file))?;
        artifacts.push(file);
    }
    for (name, field) in &outcome.fields {
        let file = format!("{name}.field");
        write_field(out_dir.join(&file), field)?;
        artifacts.push(file);
    }
    let mut echoed = cfg.clone();
    echoed.experiment = Some(experiment);
    echoed.output_dir = None;
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: experiment.name().to_string(),
        seed: cfg.seed,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        holds: outcome.holds,
        config: serde_json::to_value(&echoed)?,
        summary: serde_json::Value::Object(outcome.summary),
        tables: outcome.tables,
        artifacts,
    };
    write_report(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

fn write_report(path: &Path, report: &Report) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Parses arguments, runs and maps the result to the exit-code contract:
/// 0 when the checked property holds, 2 when it is violated, 1 on error.
pub fn main_with(cli: Cli) -> ExitCode {
    let result = init_threads().and_then(|()| match cli.command.experiment() {
        Some((experiment, args)) => {
            let report = run_experiment(experiment, args)?;
            println!("{}: {}", report.experiment, if report.holds { "holds" } else { "violated" });
            Ok(report.holds)
        }
        None => {
            let Command::ReportRender(args) = &cli.command else { unreachable!() };
            let text = render::render(&args.report, args.out.as_deref())?;
            print!("{text}");
            Ok(true)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Batch front end: configuration ingestion, experiment orchestration and
//! artifact emission.
//!
//! A run reads one JSON config naming an experiment, executes it, and writes
//! `report.json` plus the experiment's CSV tables into the output directory.
//! Artifacts are only written once the whole experiment has succeeded.

mod catalog;
mod config;
mod one_d;
mod three_d;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::io::{sha256_hex, write_artifacts, Table};

pub use catalog::{catalog_json, Experiment};
pub use config::{Params, RunConfig, SCHEMA_VERSION};

/// Seed used when neither the command line nor the config sets one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    /// Config does not match the schema; `path` locates the offending field.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    /// A numerical module refused or failed.
    #[error("{module}: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: crate::Error,
    },
    #[error("writing artifacts: {0}")]
    Output(#[source] crate::Error),
}

impl RunError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Schema { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Schema { .. } => 2,
            RunError::Numerical { .. } => 3,
            RunError::Output(_) => 1,
        }
    }
}

/// Tags a library error with the module that raised it.
pub(crate) fn failed(module: &'static str) -> impl Fn(crate::Error) -> RunError {
    move |source| RunError::Numerical { module, source }
}

/// One pass/fail check, with the measured value and the limit it was held to.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= limit, value: Some(value), limit: Some(limit), detail: detail.into() }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value >= limit, value: Some(value), limit: Some(limit), detail: detail.into() }
    }

    pub fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: None, limit: None, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: Value,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub stages: Vec<Stage>,
}

impl Outcome {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub(crate) fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_string(), value);
    }

    /// Runs `f` and records its wall time under `name`.
    pub(crate) fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, RunError>) -> Result<T, RunError> {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}

/// Per-run context handed to every experiment.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl Default for Context {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, base_dir: PathBuf::from(".") }
    }
}

/// Runs an experiment from its parameter object (the config minus the
/// `experiment`, `schema_version` and `seed` keys). Used by the acceptance
/// suite to drive the same code paths as the binary.
pub fn run_experiment(experiment: Experiment, params: Value, ctx: &Context) -> Result<Outcome, RunError> {
    let params = Params::parse(experiment, params, &ctx.base_dir)?;
    params.run(ctx)
}

#[derive(Debug, Parser)]
#[command(name = "dispersive", version, about = "Numerical laboratory for dispersive estimates of -Δ + V")]
pub struct Cli {
    /// Output directory for report.json and CSV tables.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for the Monte Carlo streams; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// List the available experiments.
    ListExperiments {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

/// Entry point of the binary.
pub fn main_with(cli: Cli) -> ExitCode {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // A second initialisation only happens in tests; the existing pool
        // is kept then.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::ListExperiments { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(&catalog_json()).expect("catalog serialises"));
            } else {
                print!("{}", catalog::catalog_text());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config } => match run_config(&config, cli.seed, &cli.out) {
            Ok(report) => {
                for w in report["warnings"].as_array().into_iter().flatten() {
                    eprintln!("warning: {}", w.as_str().unwrap_or_default());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}

/// Loads, runs and writes one config; returns the report.
pub fn run_config(path: &std::path::Path, seed: Option<u64>, out: &std::path::Path) -> Result<Value, RunError> {
    let start = Instant::now();
    let config = RunConfig::load(path)?;
    let seed = seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let ctx = Context { seed, base_dir: config.base_dir.clone() };
    let outcome = config.params.run(&ctx)?;

    let effective = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment.name(),
        "seed": seed,
        "parameters": config.params.to_value(),
    });
    let hash = sha256_hex(&serde_json::to_vec(&effective).expect("config serialises"));
    let mut warnings = outcome.warnings.clone();
    for v in outcome.verdicts.iter().filter(|v| !v.passed) {
        warnings.push(format!("check '{}' failed: {}", v.name, v.detail));
    }
    for v in &outcome.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment.name(),
        "acceptance_criterion": config.experiment.criterion(),
        "config": effective,
        "config_sha256": hash,
        "seeds": { "run": seed },
        "threads": rayon::current_num_threads(),
        "tolerances": outcome.tolerances,
        "verdicts": outcome.verdicts,
        "passed": outcome.passed(),
        "warnings": warnings,
        "wall_time_seconds": {
            "total": start.elapsed().as_secs_f64(),
            "stages": outcome.stages,
        },
        "artifacts": outcome.tables.iter().map(|t| t.file_name()).collect::<Vec<_>>(),
        "summary": outcome.summary,
    });
    write_artifacts(out, &outcome.tables, &report).map_err(RunError::Output)?;
    Ok(report)
}

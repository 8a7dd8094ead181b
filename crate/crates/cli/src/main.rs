//! paralab: config-driven experiment runner for the parabola measure
//! laboratory.
//!
//! `paralab <pipeline> [--config file.json] [--set key=value]... --out DIR [--seed N]`
//!
//! Exit codes: 0 all verdicts pass, 2 a verdict failed, 1 error.

mod cache;
mod pipelines;
mod record;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use record::ExperimentSpec;

#[derive(Parser, Debug)]
#[command(
    name = "paralab",
    about = "Measured-vs-predicted experiments for fractal measures on the parabola"
)]
struct Cli {
    /// Pipeline name, or "list" to print the catalog.
    pipeline: String,

    /// JSON config file: {"pipeline": ..., "params": {...}, "seed": ...}.
    /// The positional pipeline wins over the file's.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Parameter overrides, key=value (value parsed as JSON, else string).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory for `<pipeline>`.csv/.json/.plotdata.
    #[arg(long, default_value = "paralab-out")]
    out: PathBuf,

    /// Seed for randomized pipelines (mandatory for them; default 0).
    #[arg(long)]
    seed: Option<u64>,
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let mut spec: ExperimentSpec =
                serde_json::from_str(&text).context("parsing config JSON")?;
            if !cli.pipeline.is_empty() {
                spec.pipeline = cli.pipeline.clone();
            }
            spec
        }
        None => ExperimentSpec {
            pipeline: cli.pipeline.clone(),
            params: BTreeMap::new(),
            seed: None,
        },
    };
    for kv in &cli.set {
        let (key, value) = kv
            .split_once('=')
            .with_context(|| format!("--set '{kv}' is not of the form key=value"))?;
        let parsed = serde_json::from_str::<serde_json::Value>(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        spec.params.insert(key.to_string(), parsed);
    }
    if let Some(seed) = cli.seed {
        spec.seed = Some(seed);
    }
    Ok(spec)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    if cli.pipeline == "list" {
        for info in pipelines::catalog() {
            println!("{:<20} {}", info.name, info.claim);
            println!("{:<20}   parameters: {}", "", info.params);
        }
        return Ok(true);
    }
    let spec = build_spec(&cli)?;
    if !pipelines::catalog().iter().any(|p| p.name == spec.pipeline) {
        bail!(
            "unknown pipeline '{}'; run `paralab list` for the catalog",
            spec.pipeline
        );
    }
    let record = pipelines::run(&spec, &cli.out)?;
    for line in record.summary_lines() {
        println!("{}: {line}", spec.pipeline);
    }
    println!(
        "{}: wrote {}.{{csv,json,plotdata}} in {} ms",
        spec.pipeline,
        cli.out.join(&spec.pipeline).display(),
        record.wall_clock_ms
    );
    Ok(record.passes())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

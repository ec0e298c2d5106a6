mod config;
mod output;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{validated, ExperimentConfig};
use output::Artifacts;
use run::Outcome;

#[derive(Parser)]
#[command(name = "kdvkam", version, about = "Quasi-periodic KdV experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the λ/ε maps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed of the single random generator (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Nash-Moser solve at every (ε, λ).
    Solve,
    /// Regularization and KAM reduction of the linearized operator.
    Reduce,
    /// Accepted fraction of the λ grid per ε.
    Measure,
    /// Direct integration against the reduced flow.
    Stability,
    /// Invariant checks of every module.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Reduce => "reduce",
            Command::Measure => "measure",
            Command::Stability => "stability",
            Command::Verify => "verify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Outcome::Failed.code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for w in validated(&cfg)? {
        eprintln!("warning: {w}");
    }
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(cli.command.name()));
    let out = Artifacts::create(&dir)?;
    let outcome = match cli.command {
        Command::Solve => run::solve(&cfg, &out)?,
        Command::Reduce => run::reduce_cmd(&cfg, &out)?,
        Command::Measure => run::measure(&cfg, &out)?,
        Command::Stability => run::stability(&cfg, &out)?,
        Command::Verify => {
            let checks = verify::run_checks(cfg.seed);
            verify::print_table(&checks);
            #[derive(Serialize)]
            struct Body {
                checks: Vec<verify::Check>,
            }
            let ok = checks.iter().all(|c| c.pass);
            out.write_trace(&checks.iter().map(TraceCheck::from).collect::<Vec<_>>())?;
            out.write_report("verify", &cfg, &Body { checks })?;
            if ok {
                Outcome::Success
            } else {
                Outcome::Failed
            }
        }
    };
    eprintln!("wrote {}", out.dir().display());
    Ok(outcome)
}

#[derive(Serialize)]
struct TraceCheck {
    module: &'static str,
    check: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl From<&verify::Check> for TraceCheck {
    fn from(c: &verify::Check) -> Self {
        TraceCheck { module: c.module, check: c.name, value: c.value, tolerance: c.tolerance, pass: c.pass }
    }
}

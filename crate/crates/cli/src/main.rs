//! `winding-lab`: CSV/JSON front end for winding-core.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use commands::*;
use output::{emit, Format, Report, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use winding_core::Error;

/// Exit status for malformed command lines.
const EXIT_USAGE: u8 = 64;
const THREADS_ENV: &str = "WINDING_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "winding-lab",
    version,
    about = "Winding numbers of nonintersecting Brownian bridges on the circle"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact winding-number distribution for one drift or a drift sweep.
    Winding(WindingArgs),
    /// Exact norms h_{n,n} against their asymptotic predictions.
    CompareNorms(CompareNormsArgs),
    /// Re φ on a grid, with band and critical-point markers.
    Sigchart(SigchartArgs),
    /// One-point density at an intermediate time.
    Density(DensityArgs),
    /// Empirical winding distribution of lattice random-walk bridges.
    Simulate(SimulateArgs),
    /// Exact p_{n,n}(z) against its asymptotic predictions.
    PolyCompare(PolyCompareArgs),
}

impl Command {
    fn run(&self) -> (Report, serde_json::Value) {
        fn params<T: serde::Serialize>(args: &T) -> serde_json::Value {
            serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
        }
        match self {
            Command::Winding(a) => (winding(a), params(a)),
            Command::CompareNorms(a) => (compare_norms(a), params(a)),
            Command::Sigchart(a) => (sigchart(a), params(a)),
            Command::Density(a) => (density(a), params(a)),
            Command::Simulate(a) => (simulate(a), params(a)),
            Command::PolyCompare(a) => (poly_compare(a), params(a)),
        }
    }
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::NonConvergence { .. } => 2,
        Error::OutOfRegime(_) => 3,
        Error::Breakdown { .. } => 4,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| format!("{THREADS_ENV}={value:?} is not a positive integer"))?;
    if threads == 0 {
        return Err(format!("{THREADS_ENV} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let start = Instant::now();
    let (report, params) = cli.command.run();
    let manifest = RunManifest::new(&report, params, start.elapsed().as_secs_f64());
    if let Err(e) = emit(&report, &manifest, cli.format, cli.out.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::FAILURE;
    }
    match &report.error {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e))
        }
        None => ExitCode::SUCCESS,
    }
}

//! `fwrde` command-line tool.
//!
//! Exit codes: 0 on success, 2 for input or configuration errors, 3 when a solver
//! hits a non-finite value (the partial trace is written before exiting).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{RunConfig, RunFlags};

#[derive(Debug, Parser)]
#[command(name = "fwrde", version, about = "Frank-Wolfe rate-distortion relevance attribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a diagonal Gaussian noise model to a data CSV (one sample per row).
    FitNoise {
        data: PathBuf,
        /// Output JSON file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a relevance map; writes map.json, trace CSVs and heatmap.pgm.
    Attribute(RunFlags),
    /// Run the relevance-ordering test on map files; writes one curve CSV per map
    /// and aggregate.csv.
    Evaluate {
        #[command(flatten)]
        run: RunFlags,
        /// One input per map, comma-separated (overrides --image).
        #[arg(long, value_delimiter = ',')]
        images: Vec<PathBuf>,
        #[arg(required = true)]
        maps: Vec<PathBuf>,
    },
    /// Run several solvers on the same problem; writes traces and summary.csv.
    BenchSolvers(RunFlags),
    /// Convert a map JSON into a P5 greyscale heatmap.
    Render {
        map: PathBuf,
        /// Output PGM file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("FWRDE_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .with_context(|| format!("FWRDE_THREADS must be a positive integer, got '{value}'"))?;
        anyhow::ensure!(n > 0, "FWRDE_THREADS must be a positive integer, got '{value}'");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::FitNoise { data, out } => commands::fit_noise(&data, &out),
        Command::Attribute(flags) => commands::attribute(&RunConfig::resolve(&flags)?),
        Command::Evaluate { run, images, maps } => commands::evaluate(&RunConfig::resolve(&run)?, &images, &maps),
        Command::BenchSolvers(flags) => commands::bench_solvers(&RunConfig::resolve(&flags)?),
        Command::Render { map, out, width, height } => commands::render(&map, &out, width, height),
    }
}

fn is_numeric_failure(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|e| matches!(e.downcast_ref::<fwrde::Error>(), Some(fwrde::Error::NonFinite { .. })))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_numeric_failure(&err) {
                ExitCode::from(EXIT_NUMERIC)
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
    }
}

//! `cuntz-lab`: batch front end for the cuntzlab library.
//!
//! Exit codes: 0 on success, 2 when the computed certificate or check is
//! false, 1 on errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "cuntz-lab", version)]
#[command(about = "Cuntz comparison, radius of comparison and Villadsen-type limits on sampled spaces")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Parse and validate the inputs, then stop.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Eigenvalues at or below this count as zero.
    #[arg(long, global = true, default_value_t = cuntzlab::matfield::DEFAULT_RANK_TOL)]
    rank_tol: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank-gap certificate for a pair of fields, with an optional witness search.
    Compare(commands::CompareArgs),
    /// Radius-of-comparison upper bound of a decomposition.
    RcBound(commands::RcBoundArgs),
    /// Slow dimension growth check of an inductive sequence.
    SdgCheck(commands::SdgArgs),
    /// Stage table, parameter validation and divisibility for a Villadsen family.
    Villadsen(commands::VilladsenArgs),
    /// Intertwining defect bound, optionally evaluated on a measure.
    Intertwine(commands::IntertwineArgs),
    /// Images of a pair in the semigroup model and their order.
    Semigroup(commands::SemigroupArgs),
    /// Binned spectrum and spectral distributions under traces.
    Ell(commands::EllArgs),
    /// Identities of the scalar function kit on a grid.
    KitTest(commands::KitArgs),
    /// Emit a grid space as JSON.
    Grid(commands::GridArgs),
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("CUNTZLAB_THREADS") {
        let threads: usize = value
            .parse()
            .map_err(|_| anyhow::anyhow!("CUNTZLAB_THREADS must be a positive integer, got {value:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| {
        let c = &cli.common;
        match &cli.command {
            Command::Compare(a) => commands::compare(a, c),
            Command::RcBound(a) => commands::rc_bound(a, c),
            Command::SdgCheck(a) => commands::sdg_check(a, c),
            Command::Villadsen(a) => commands::villadsen(a, c),
            Command::Intertwine(a) => commands::intertwine(a, c),
            Command::Semigroup(a) => commands::semigroup(a, c),
            Command::Ell(a) => commands::ell(a, c),
            Command::KitTest(a) => commands::kit_test(a, c),
            Command::Grid(a) => commands::grid(a, c),
        }
    });
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! `skewbm`: analyze measures, construct densities, run simulations and
//! inspect Cantor-type examples. Exit codes: 0 success (a process exists),
//! 2 no process exists, 1 input or runtime error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "skewbm", version, about = "General skew Brownian motion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Euler,
    Walk,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GapModelChoice {
    PowerLaw,
    MiddleProportion,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetChoice {
    AnyValid,
    MaximallyGlued,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide existence, uniqueness and irreducibility; write a JSON report.
    Analyze {
        spec: PathBuf,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate paths and write path, occupation, local-time and drift files.
    Simulate(SimulateArgs),
    /// Verdict, gap census and witness constants for a Cantor-type measure.
    Cantor {
        /// Constant proportion, decimal or p/q.
        #[arg(long, conflicts_with = "geometric")]
        alpha: Option<String>,
        /// Level-dependent proportions `first·ratio^(p−1)`.
        #[arg(long, num_args = 2, value_names = ["FIRST", "RATIO"])]
        geometric: Option<Vec<String>>,
        #[arg(long, default_value_t = skewbm::cantor::DEFAULT_DEPTH)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = GapModelChoice::PowerLaw)]
        gap_model: GapModelChoice,
        /// Emit the witness constants `c_n = β^(p−1)`.
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the density ρ on a grid and the constants c_n.
    Construct {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = TargetChoice::AnyValid)]
        target: TargetChoice,
        /// Sample ρ on [lo, hi].
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values = ["-2", "2"])]
        range: Vec<f64>,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Output directory; files `constants.csv` and `density.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x0: f64,
    /// Horizon T.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Euler step; defaults to 1e-4·T.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Walk grid spacing; defaults to the largest 1/m ≤ 0.01·√T putting atoms on the grid.
    #[arg(long)]
    pub grid: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeChoice::Both)]
    pub scheme: SchemeChoice,
    /// Half-width of the local-time windows; defaults to five step widths.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Paths written to `paths_*.csv`.
    #[arg(long, default_value_t = 100)]
    pub export_paths: usize,
    /// Simulate with the grid walk even when no process exists.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { spec, out } => commands::analyze(&spec, out.as_deref()),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Cantor { alpha, geometric, depth, gap_model, beta, out } => {
            commands::cantor(alpha.as_deref(), geometric.as_deref(), depth, gap_model, beta.as_deref(), out.as_deref())
        }
        Command::Construct { spec, target, range, points, out } => {
            commands::construct(&spec, target, (range[0], range[1]), points, &out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

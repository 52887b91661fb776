//! `quadsmooth` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 for
//! mesh, geometry and I/O failures.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{AlgoName, Budget, NamedSurface};
use quadsmooth::{Metric, UpdateOrder};

#[derive(Debug, Parser)]
#[command(
    name = "quadsmooth",
    version,
    about = "Smooth and grade quadrilateral meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a grid or disk mesh, optionally perturbed and lifted.
    Generate(GenerateArgs),
    /// Smooth one mesh with one algorithm.
    Smooth(SmoothArgs),
    /// Print the quality table row of a mesh.
    Quality(QualityArgs),
    /// Smooth with every algorithm and tabulate the results.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(subcommand)]
    shape: Option<ShapeCmd>,
    /// JSON generator spec; replaces the shape subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output mesh; a `.json` sidecar is written next to it.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Random offset as a fraction of each node's shortest incident edge.
    #[arg(long, global = true)]
    perturb: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Lift nodes onto a height surface and bind the mesh to it.
    #[arg(long, global = true)]
    lift: Option<NamedSurface>,
}

#[derive(Debug, Subcommand)]
enum ShapeCmd {
    Grid {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        /// Lower-left corner as `X,Y`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        origin: Option<[f64; 2]>,
    },
    Disk {
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        rings: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SurfaceChoice {
    /// Use the sidecar or config binding, if any.
    Auto,
    None,
    Paraboloid,
    Flat,
    Kriging,
}

/// Options shared by `smooth` and `compare`.
#[derive(Debug, Args)]
struct RunArgs {
    /// Input mesh; overrides the config's input.
    input: Option<PathBuf>,
    /// JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SurfaceChoice::Auto)]
    surface: SurfaceChoice,
    /// CSV of `x,y,z` kriging samples; default is the input nodes.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Kriging neighborhood size.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Absolute stopping displacement.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, value_enum)]
    budget: Option<Budget>,
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    /// Let boundary nodes move.
    #[arg(long)]
    free_boundary: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::Gamma)]
    metric: MetricArg,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    algo: Option<AlgoName>,
    /// T-Base weight variant.
    #[arg(long)]
    variant: Option<u8>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write iteration statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QualityArgs {
    mesh: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Gamma)]
    metric: MetricArg,
    /// Also write the row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated list, e.g. `ls,1,2,3`.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write each smoothed mesh here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Simultaneous,
    Sequential,
}

impl From<OrderArg> for UpdateOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Simultaneous => UpdateOrder::Simultaneous,
            OrderArg::Sequential => UpdateOrder::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Lambda,
    Gamma,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Lambda => Metric::Lambda,
            MetricArg::Gamma => Metric::Gamma,
        }
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let mut it = s.split(',').map(|t| t.trim().parse::<f64>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(x)), Some(Ok(y)), None) => Ok([x, y]),
        _ => Err(format!("expected X,Y, got `{s}`")),
    }
}

/// Marks an error as the caller's fault (exit status 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Smooth(a) => commands::smooth(a),
        Command::Quality(a) => commands::quality(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

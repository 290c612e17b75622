//! `qwres`: resonances, scattering matrices and ε-sweeps from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure or
//! tolerance breach, 3 usage error.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qwres::par::Execution;

#[derive(Parser)]
#[command(name = "qwres", version, about = "Resonances and scattering of quantum walks on graphs with tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check balance, coin unitarity and the free routing at eps = 0.
    Validate(ValidateArgs),
    /// Resonances (eigenvalues of the interior block) at one eps or over a grid.
    Resonances(ResonancesArgs),
    /// Scattering matrix on a set of points z.
    Smatrix(SmatrixArgs),
    /// eps-sweep experiments with fitted slopes and band checks.
    Sweep(SweepArgs),
    /// Transmission through two or three barriers on the line.
    Barrier(BarrierArgs),
    /// Write a model as a JSON model file.
    Export(ExportArgs),
}

#[derive(Args, Clone)]
pub struct ModelArgs {
    /// `ms`, `cycle`, `random` or the path of a JSON model file.
    #[arg(long)]
    pub model: String,
    /// Number of vertices of `cycle`.
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    /// Coupling constants of `cycle`, comma separated (default: all 1).
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
    /// Seed for `random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Clone)]
pub struct SpectralArgs {
    /// Absolute eigenvalue clustering tolerance (default 1e-8·‖M‖).
    #[arg(long)]
    pub tol_cluster: Option<f64>,
    /// Distance from the unit circle below which an eigenvalue counts as on it.
    #[arg(long, default_value_t = qwres::spectral::DEFAULT_TOL_CIRCLE)]
    pub tol_circle: f64,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also check unitarity at this eps.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ResonancesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, conflicts_with = "eps_grid")]
    pub eps: Option<f64>,
    /// `a:b:n`, geometric.
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Resolvent,
    Expansion,
    /// Dense solve of the interior system.
    Oracle,
}

#[derive(Args)]
pub struct SmatrixArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// A point z, e.g. `0.921+0.390i`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Vec<String>,
    /// `n` equally spaced points on the unit circle.
    #[arg(long)]
    pub z_grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = RouteArg::Resolvent)]
    pub route: RouteArg,
    /// Compute every route and report the largest entrywise gap.
    #[arg(long)]
    pub check_routes: bool,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// `‖Σ(ε,z) - Σ(0,z)‖` and the transmission at a fixed non-resonant z.
    Discrepancy,
    /// Transmission at the peak `λ_ε/|λ_ε|`.
    Tunneling,
    /// Half-height width of the transmission peak.
    Width,
    /// Comfortability at the peak.
    Comfort,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub quantity: Quantity,
    #[command(flatten)]
    pub model: ModelArgs,
    /// `a:b:n`, geometric.
    #[arg(long, default_value = "1e-3:1e-1:51")]
    pub eps_grid: String,
    /// Fixed point for `discrepancy`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Channel group J, 1-based tail labels.
    #[arg(long = "J", value_delimiter = ',', default_value = "1")]
    pub j: Vec<usize>,
    /// Follow only the unit-circle eigenvalue of U(0) nearest to this point.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<String>,
    /// Where to write the JSON summary (default: stderr, or embedded with --format json).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Evaluate the grid points one after another.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl SweepArgs {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
pub struct BarrierArgs {
    /// Barrier sites, starting at 0 and increasing.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub positions: Vec<i64>,
    /// Rotation coins `[[√(1-r²), r], [-r, √(1-r²)]]`, one r per barrier.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, group = "coins")]
    pub r: Vec<f64>,
    /// A coin as four entries `c11,c12,c21,c22`; repeat once per barrier.
    #[arg(long, allow_hyphen_values = true, group = "coins")]
    pub coin: Vec<String>,
    /// Coins with `C11 = e^{-c/eps}`, one c per barrier; needs --eps.
    #[arg(long, value_delimiter = ',', group = "coins", requires = "eps")]
    pub tunnel: Vec<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Vec<String>,
    #[arg(long)]
    pub z_grid: Option<usize>,
    /// Also compute T through the equivalent graph and report the gap.
    #[arg(long)]
    pub check_graph: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Resonances(a) => commands::resonances(&a),
        Command::Smatrix(a) => commands::smatrix(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Barrier(a) => commands::barrier(&a),
        Command::Export(a) => commands::export(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qwres: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

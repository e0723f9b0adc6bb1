mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlfrac_core::Error;

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "mlfrac", version, about = "Fractional Cauchy problems solved with Mittag-Leffler expansions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random draw; recorded in the output header.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Absolute tolerance of series truncation.
    #[arg(long, global = true, default_value = "1e-14")]
    pub abs_tol: f64,
    /// Relative tolerance of series truncation.
    #[arg(long, global = true, default_value = "1e-12")]
    pub rel_tol: f64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a Mittag-Leffler function.
    MlEval(MlEvalArgs),
    /// Solve a problem file on a time grid.
    Solve(SolveArgs),
    /// Check a solution against the Laplace and Caputo oracles.
    Verify(VerifyArgs),
    /// Lower the order of a problem by a random time change.
    Subordinate(SubordinateArgs),
    /// Empirical characteristic function of a random motion.
    Simulate(SimulateArgs),
    /// Closed-form against simulated characteristic functions for a preset motion.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MlKind {
    Ml2,
    Prabhakar,
    Multi,
}

#[derive(Args, Debug)]
pub struct MlEvalArgs {
    #[arg(long, value_enum)]
    pub kind: MlKind,
    #[arg(long)]
    pub nu: f64,
    /// Real or "re,im".
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub delta: String,
    /// One per variable for `multi`; ignored by `ml2`.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Vec<String>,
    /// Arguments as "re,im"; one row each, or one vector for `multi`.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z: Vec<String>,
    #[arg(long, default_value_t = 2000)]
    pub max_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Form {
    Auto,
    General,
    Distinct,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// Comma list "0,0.5,1" or "start:stop:count"; empty for no rows.
    #[arg(long, default_value = "")]
    pub t_grid: String,
    #[arg(long, value_enum, default_value_t = Form::Auto)]
    pub form: Form,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub problem: PathBuf,
    /// Times of the Laplace round trip.
    #[arg(long, default_value = "0.5,1,2")]
    pub t_grid: String,
    #[arg(long, default_value_t = 1e-6)]
    pub laplace_tol: f64,
    /// Time at which the Caputo residual is evaluated.
    #[arg(long, default_value_t = 1.0)]
    pub caputo_t: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub residual_tol: f64,
    /// Added to every solution value before checking.
    #[arg(long, default_value_t = 0.0, hide = true, allow_hyphen_values = true)]
    pub perturb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubMethod {
    Mc,
    Quadrature,
    Iterated,
}

#[derive(Args, Debug)]
pub struct SubordinateArgs {
    /// Problem of the lowered order.
    pub problem: PathBuf,
    #[arg(long)]
    pub divisor: usize,
    #[arg(long, value_enum, default_value_t = SubMethod::Mc)]
    pub method: SubMethod,
    #[arg(long, default_value = "0.5,1,2")]
    pub t_grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Orthogonal,
    ThreeDirection,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON motion file; overrides --preset.
    #[arg(long)]
    pub motion: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Orthogonal)]
    pub preset: Preset,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Fourier variable as a comma list, one per output row group.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub alpha: Vec<String>,
    #[arg(long, default_value = "1")]
    pub t_grid: String,
}

#[derive(Args, Debug)]
pub struct ExampleArgs {
    #[arg(value_enum)]
    pub preset: Preset,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ZeroRoot(_) => 3,
        Error::NonConvergence { .. }
        | Error::PrecisionLoss { .. }
        | Error::RootNonConvergence { .. }
        | Error::InconsistentSpectrum { .. }
        | Error::Quadrature { .. }
        | Error::LaplaceNonConvergence { .. }
        | Error::Pole(_) => 2,
        _ => 1,
    }
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(std::io::Error),
    Usage(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("MLFRAC_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();
    let command_line = std::iter::once("mlfrac".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ");
    let result = match &cli.command {
        Command::MlEval(a) => commands::ml_eval(a, &cli.common, &command_line),
        Command::Solve(a) => commands::solve(a, &cli.common, &command_line),
        Command::Verify(a) => commands::verify(a, &cli.common, &command_line),
        Command::Subordinate(a) => commands::subordinate(a, &cli.common, &command_line),
        Command::Simulate(a) => commands::simulate(a, &cli.common, &command_line),
        Command::Example(a) => commands::example(a, &cli.common, &command_line),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verify) => ExitCode::from(4),
    }
}

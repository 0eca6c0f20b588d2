//! Command-line front end for `physarum-core`.
//!
//! Results go to standard output as JSON, diagnostics to standard error.
//! Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 invalid
//! problem, 4 numerical failure, 5 verification violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_VIOLATION: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "physarum",
    version,
    about = "Physarum dynamics for linear programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the discrete iteration to a (1 + eps)-approximate optimum.
    Solve(SolveArgs),
    /// Integrate the continuous dynamics and report convergence diagnostics.
    Flow(FlowArgs),
    /// Follow the entropy-regularized optimizer path.
    Path(PathArgs),
    /// Enumerate vertices and rays and report the exact optimum.
    Oracle(ProblemArg),
    /// Print the derived constants (C_s, D, P_max, beta).
    Params(ParamsArgs),
    /// Solve with the potential certificate and run the pointwise checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    /// Problem file (JSON with keys A, b, c and optional name, start).
    pub file: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartChoice {
    /// Interior point from the enumeration oracle.
    Auto,
    /// The `start` vector of the problem file.
    File,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Step length; defaults to eps / (6 P_max^2).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub start: StartChoice,
    /// Write the iterates to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trace_every: u64,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Stop once c^T x drops to this value.
    #[arg(long)]
    pub target_cost: Option<f64>,
    /// Accept a start violating Ax = b (no guarantees apply).
    #[arg(long)]
    pub experimental_infeasible: bool,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub t_end: f64,
    /// Comma-separated positive start; defaults to the file's start or the
    /// oracle interior point.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.25)]
    pub sample_dt: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub grid_step: f64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also integrate the flow and report the largest deviation from it.
    #[arg(long)]
    pub check_flow: bool,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    pub file: PathBuf,
    /// Compute D exactly instead of the Hadamard-type upper bound.
    #[arg(long)]
    pub exact_d: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random points per pointwise check.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub trace_every: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<physarum_core::io::ProblemError> for Failure {
    fn from(e: physarum_core::io::ProblemError) -> Self {
        use physarum_core::io::ProblemError;
        let code = match &e {
            ProblemError::ValidationFailed(inner) => exit_code(inner),
            ProblemError::Io { .. } | ProblemError::Malformed { .. } => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<physarum_core::Error> for Failure {
    fn from(e: physarum_core::Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &physarum_core::Error) -> i32 {
    use physarum_core::Error as E;
    match e {
        E::BadEps(_) | E::BadStep { .. } | E::InvalidArgument(_) => EXIT_USAGE,
        E::DimensionMismatch(_)
        | E::RankDeficient { .. }
        | E::NonPositiveCost { .. }
        | E::NoFeasibleInteriorStart(_)
        | E::NoInteriorPoint { .. }
        | E::Infeasible
        | E::TooLarge { .. }
        | E::ExactTooLarge { .. } => EXIT_INVALID,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

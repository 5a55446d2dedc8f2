//! `cobord-ops`: exact-arithmetic checks from the shell.
//!
//! Every subcommand builds its objects from scratch, runs the requested
//! computation, and renders one report in the selected format.  Exit codes:
//! 0 when every check passed, 1 when a check failed (a JSON witness goes to
//! the failure channel), 2 when the flags themselves are unusable.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod fgl;
mod input;
mod model;
mod ops;
mod report;
mod snc;
mod symop;
mod taylor;

use report::Format;

/// Errors a subcommand can surface before or instead of a report.
#[derive(Debug)]
pub enum CliError {
    /// The flags don't describe a runnable job; exit 2.
    Usage(String),
    /// The job started but could not finish; exit 1 with a witness.
    Failed(String),
}

#[derive(Parser)]
#[command(name = "cobord-ops", version, about = "exact checks for formal group laws, operations and divisor calculus")]
struct Cli {
    /// Output format for the report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Formal group law tables.
    Fgl {
        #[command(subcommand)]
        cmd: FglCmd,
    },
    /// Discrete Taylor expansion suites.
    Taylor {
        #[command(subcommand)]
        cmd: TaylorCmd,
    },
    /// Axiom checks for operations between laws.
    Ops {
        #[command(subcommand)]
        cmd: OpsCmd,
    },
    /// Divisor models: recombination, pull-backs, push-forwards.
    Snc {
        #[command(subcommand)]
        cmd: SncCmd,
    },
    /// The symmetric operation: division by the formal [p].
    Symop {
        #[command(subcommand)]
        cmd: SymopCmd,
    },
}

#[derive(Subcommand)]
enum FglCmd {
    /// Coefficients of the universal law up to a degree.
    Universal {
        #[arg(long)]
        deg: i64,
        /// Coefficient generators to allocate (default: --deg).
        #[arg(long)]
        gens: Option<usize>,
    },
    /// The n-series of a law as a table of t-powers.
    Nseries {
        #[arg(long)]
        n: i64,
        #[arg(long, value_enum, default_value_t = fgl::LawName::Universal)]
        law: fgl::LawName,
        #[arg(long, default_value_t = 6)]
        deg: i64,
    },
}

#[derive(Subcommand)]
enum TaylorCmd {
    /// Run a randomized suite and report failures.
    Check {
        #[arg(long, value_enum)]
        suite: taylor::TaylorSuiteArg,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
}

#[derive(Subcommand)]
enum OpsCmd {
    /// Check the interchange axioms for one operation over all laws.
    Check {
        /// identity | power:P | steenrod:P
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 3)]
        deg: i64,
    },
}

#[derive(Subcommand)]
enum SncCmd {
    /// Run a divisor-model suite.
    Check {
        #[arg(long, value_enum)]
        suite: snc::SncSuiteArg,
        /// JSON model file; omitted means the built-in two-component model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        deg: i64,
    },
}

#[derive(Subcommand)]
enum SymopCmd {
    /// Divide the nonpositive part of □^p − St on one input by [p].
    Phi {
        #[arg(long)]
        p: i64,
        /// Comma-separated residue representatives (default 1..p-1).
        #[arg(long)]
        reps: Option<String>,
        /// Inline polynomial, e.g. "z1^2 + 2*b1*z1".
        #[arg(long)]
        input: Option<String>,
        /// JSON term list for larger inputs.
        #[arg(long)]
        input_file: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        deg: i64,
        /// Laurent floor K: keep t-exponents ≥ −K (default: --deg).
        #[arg(long)]
        floor: Option<i64>,
        /// Coefficient generators to allocate (default: sized from the input).
        #[arg(long)]
        gens: Option<usize>,
    },
    /// Division, residual and uniqueness checks on the standard inputs.
    Verify {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        reps: Option<String>,
        #[arg(long, default_value_t = 4)]
        deg: i64,
        #[arg(long)]
        gens: Option<usize>,
    },
}

fn run(cmd: Cmd) -> Result<report::Report, CliError> {
    match cmd {
        Cmd::Fgl { cmd: FglCmd::Universal { deg, gens } } => fgl::universal(deg, gens),
        Cmd::Fgl { cmd: FglCmd::Nseries { n, law, deg } } => fgl::nseries(n, law, deg),
        Cmd::Taylor { cmd: TaylorCmd::Check { suite, seed, instances } } => taylor::check(suite, seed, instances),
        Cmd::Ops { cmd: OpsCmd::Check { op, deg } } => ops::check(&op, deg),
        Cmd::Snc { cmd: SncCmd::Check { suite, model, deg } } => snc::check(suite, model.as_deref(), deg),
        Cmd::Symop { cmd: SymopCmd::Phi { p, reps, input, input_file, deg, floor, gens } } => {
            symop::phi(p, reps.as_deref(), input.as_deref(), input_file.as_deref(), deg, floor, gens)
        }
        Cmd::Symop { cmd: SymopCmd::Verify { p, reps, deg, gens } } => symop::verify(p, reps.as_deref(), deg, gens),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(report) => {
            let ok = report.ok;
            report.render(cli.format);
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            println!("{}", serde_json::json!({ "status": "fail", "witness": msg }));
            ExitCode::from(1)
        }
    }
}

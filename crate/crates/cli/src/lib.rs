//! Command-line front end for dualkit: run an algorithm from a JSON config,
//! certify a registered primal/dual pairing, or list what is available.
//!
//! Exit codes: 0 converged or verified, 1 verification failed, 2 iteration
//! cap reached, 3 diverged, 4 usage, config or library error.

pub mod commands;
pub mod config;
pub mod error;
pub mod registry;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub use commands::exit;
pub use error::CliError;

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "DUALKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dualkit", version, about = "Convex duality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm on one problem and write its trace as JSON lines.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Trace file; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a primal/dual pairing and check its relations.
    Verify {
        /// Pair id, as printed by `list`.
        #[arg(long)]
        pair: String,
        /// Seed of the bundled instance.
        #[arg(long)]
        seed: u64,
        /// Iterations of both runs.
        #[arg(long)]
        iters: usize,
        /// Largest accepted relation residual.
        #[arg(long)]
        tol: f64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List problem, algorithm and pair ids.
    List,
}

/// Sizes the global rayon pool from `DUALKIT_THREADS`, if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Setting(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Setting(format!("cannot build the thread pool: {e}")))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let informational = matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = err.render().to_string();
            if informational {
                let _ = stdout.write_all(rendered.as_bytes());
                return exit::CONVERGED;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return exit::USAGE;
        }
    };
    let outcome = match cli.command {
        Command::Run { config, out } => commands::run(&config, out.as_deref(), stdout, stderr),
        Command::Verify { pair, seed, iters, tol, out } => {
            commands::verify(&pair, seed, iters, tol, out.as_deref(), stdout, stderr)
        }
        Command::List => commands::list(stdout),
    };
    outcome.unwrap_or_else(|err| {
        let _ = writeln!(stderr, "error: {err}");
        exit::USAGE
    })
}

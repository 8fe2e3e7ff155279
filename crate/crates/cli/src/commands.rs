use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dualkit::pairings::{run_pair, PAIRS};
use dualkit::trace::Status;

use crate::config::{Algorithm, RunConfig};
use crate::error::CliError;
use crate::registry::{execute, PROBLEMS};

/// Process exit codes.
pub mod exit {
    pub const CONVERGED: u8 = 0;
    pub const VERIFICATION_FAILED: u8 = 1;
    pub const MAX_ITERS: u8 = 2;
    pub const DIVERGED: u8 = 3;
    pub const USAGE: u8 = 4;
}

fn open_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn stdout_error(source: std::io::Error) -> CliError {
    CliError::Write { path: PathBuf::from("<stdout>"), source }
}

/// Runs one configured algorithm. The trace goes to `out`, else to the
/// config's `output`, else to `stdout`; a summary line goes to `log`.
pub fn run(config_path: &Path, out: Option<&Path>, stdout: &mut dyn Write, log: &mut dyn Write) -> Result<u8, CliError> {
    let config = RunConfig::load(config_path)?;
    let trace = execute(&config)?;
    match out.or(config.output.as_deref()) {
        Some(path) => {
            let mut file = open_output(path)?;
            trace.write_jsonl(&mut file)?;
            file.flush().map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        }
        None => trace.write_jsonl(&mut *stdout)?,
    }
    let last = trace.last();
    let objective = last.objective.map_or_else(|| "n/a".to_string(), |v| format!("{v:.12e}"));
    let status = match trace.status {
        Status::Converged => "converged",
        Status::MaxIters => "reached the iteration cap",
        Status::Diverged => "diverged",
    };
    let _ = writeln!(log, "{}: {status} after {} iterations, objective {objective}", trace.algorithm, trace.iterations());
    Ok(match trace.status {
        Status::Converged => exit::CONVERGED,
        Status::MaxIters => exit::MAX_ITERS,
        Status::Diverged => exit::DIVERGED,
    })
}

/// Runs a registered pairing and writes its report as JSON.
pub fn verify(
    pair: &str,
    seed: u64,
    iters: usize,
    tol: f64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    log: &mut dyn Write,
) -> Result<u8, CliError> {
    let report = match run_pair(pair, seed, iters, tol) {
        Ok(report) => report,
        Err(err @ dualkit::Error::InitialMismatch { .. }) => {
            let _ = writeln!(log, "{pair}: {err}");
            return Ok(exit::VERIFICATION_FAILED);
        }
        Err(err) => return Err(err.into()),
    };
    let json = serde_json::to_string_pretty(&report).map_err(dualkit::Error::from)?;
    match out {
        Some(path) => {
            let mut file = open_output(path)?;
            writeln!(file, "{json}")
                .and_then(|()| file.flush())
                .map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        }
        None => writeln!(stdout, "{json}").map_err(stdout_error)?,
    }
    let verdict = if report.pass { "pass" } else { "FAIL" };
    let _ = writeln!(
        log,
        "{pair}: max residual {:.3e} over {} iterations at tol {tol:e}: {verdict}",
        report.max_residual, report.iterations
    );
    Ok(if report.pass { exit::CONVERGED } else { exit::VERIFICATION_FAILED })
}

/// Writes every problem, algorithm and pair id with a description.
pub fn list(stdout: &mut dyn Write) -> Result<u8, CliError> {
    let mut text = String::from("problems:\n");
    for (id, summary) in PROBLEMS {
        text += &format!("  {id:<28} {summary}\n");
    }
    text += "algorithms:\n";
    for algorithm in Algorithm::ALL {
        text += &format!("  {:<28} {} (accepts: {})\n", algorithm.id(), algorithm.summary(), algorithm.accepts());
    }
    text += "pairs:\n";
    for pair in PAIRS {
        text += &format!("  {:<28} {} <-> {}: {}\n", pair.id, pair.primal, pair.dual, pair.summary);
    }
    stdout.write_all(text.as_bytes()).map_err(stdout_error)?;
    Ok(exit::CONVERGED)
}

use std::path::PathBuf;

use thiserror::Error;

use crate::config::Algorithm;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Config { path: PathBuf, line: usize, column: usize, message: String },

    #[error("algorithm `{algorithm}` does not apply to problem `{problem}`; it accepts: {accepts}")]
    Incompatible { algorithm: Algorithm, problem: &'static str, accepts: &'static str },

    #[error("invalid setting: {0}")]
    Setting(String),

    #[error(transparent)]
    Library(#[from] dualkit::Error),
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

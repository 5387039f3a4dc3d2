//! Experiment harness and file formats around `isdjs-core`: benchmark
//! sweeps with seeded trial-level parallelism, CSV/JSON interchange, and
//! the task-directory loader for multi-task runs. The `isdjs` binary in
//! this crate exposes everything as subcommands.

pub mod bench;
pub mod config;
pub mod io;
pub mod mtl_io;

use std::fmt;

/// Harness-level errors, mapped to process exit codes by the binary:
/// configuration and I/O problems exit 2, solver divergence exits 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(std::io::Error),
    Solver(isdjs_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<isdjs_core::Error> for CliError {
    fn from(e: isdjs_core::Error) -> Self {
        match e {
            isdjs_core::Error::Diverged { .. } | isdjs_core::Error::StageDiverged { .. } => {
                CliError::Solver(e)
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let io = CliError::from(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(io.exit_code(), 2);
        let div = CliError::from(isdjs_core::Error::Diverged { iter: 3 });
        assert_eq!(div.exit_code(), 3);
        let staged = CliError::from(isdjs_core::Error::StageDiverged { stage: 2, iter: 7 });
        assert_eq!(staged.exit_code(), 3);
        // non-divergence solver errors are configuration problems
        let cfg = CliError::from(isdjs_core::Error::ZeroData);
        assert_eq!(cfg.exit_code(), 2);
    }
}

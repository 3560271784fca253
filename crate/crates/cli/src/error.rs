use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
            Self::Verify(_) => 3,
        })
    }
}

/// Library errors that can be detected before any sampling counts as
/// configuration errors; the rest are runtime failures.
impl From<sphmc::Error> for CliError {
    fn from(e: sphmc::Error) -> Self {
        use sphmc::Error as E;
        match e {
            E::InvalidConfig(_)
            | E::InvalidConstraint(_)
            | E::Unsupported { .. }
            | E::DimensionMismatch { .. }
            | E::Parse(_)
            | E::RankDeficient
            | E::SingularMatrix(_)
            | E::NotSpd => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

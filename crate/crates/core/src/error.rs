use thiserror::Error;

/// Errors raised across the sampling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    DomainViolation(String),
    #[error("matrix is singular (|det| = {0:e})")]
    SingularMatrix(f64),
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("point is on the equator of the sphere (1 - |theta|^2 = {0:e})")]
    EquatorSingularity(f64),
    #[error("spherical coordinates hit a pole (sin theta = {0:e})")]
    PoleSingularity(f64),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("series is degenerate (variance {0:e})")]
    DegenerateSeries(f64),
    #[error("all importance weights are zero")]
    AllWeightsZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{kernel} does not support {what}")]
    Unsupported { kernel: &'static str, what: String },
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

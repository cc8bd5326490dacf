use thiserror::Error;

/// Errors produced by the relay analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bandwidth ratio must lie in [1/2, 1], got {0}")]
    RhoOutOfRange(String),
    #[error("snr must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("loop gain must be non-negative and finite, got {0}")]
    InvalidLoopGain(f64),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("matrix path needs at least one unused subcarrier (P >= 1); rho = 1 is served by closed forms")]
    FullOverlapMatrixPath,
    #[error("receiver {0} has no matrix path at rho = 1")]
    ReceiverUndefinedAtFullOverlap(&'static str),
    #[error("gain-control solve did not converge within {steps} steps (residual {residual:e})")]
    AgcNoConvergence { steps: usize, residual: f64 },
    #[error(
        "factorization failed at pivot {pivot}: matrix is not positive definite (NaN inputs?)"
    )]
    NotPositiveDefinite { pivot: usize },
    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

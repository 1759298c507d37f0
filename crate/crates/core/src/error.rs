use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no bound state: {0}")]
    NoBoundState(String),
    #[error("field not normalized: norm = {0}")]
    NotNormalized(f64),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("evaluation failure: {0}")]
    EvaluationFailure(String),
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("degenerate regularization length: {0}")]
    DegenerateD(String),
    #[error("matching pole: {0}")]
    PoleAtMatching(String),
    #[error("no turning point: {0}")]
    NoTurningPoint(String),
    #[error("invalid c: {0} (must be >= 1)")]
    InvalidC(f64),
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("divergent limit: {0}")]
    DivergentLimit(String),
    #[error("unsupported wall: {0}")]
    UnsupportedWall(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure(_)
                | Error::FitFailure(_)
                | Error::EvaluationFailure(_)
                | Error::PoleAtMatching(_)
                | Error::NoTurningPoint(_)
                | Error::NoSolution(_)
                | Error::DegeneratePath(_)
                | Error::NotNormalized(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

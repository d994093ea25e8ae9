use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("point {x} is not strictly inside the domain")]
    OutsideDomain { x: f64 },
    #[error("grid does not match domain: {0}")]
    GridMismatch(String),
    #[error("truncation not needed: {0}")]
    TruncationNotNeeded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("eigenvalue iteration did not converge for index {index}")]
    NoConvergence { index: usize },
    #[error("fiducial not admissible: {0}")]
    FiducialNotAdmissible(String),
    #[error("finite-difference step rejected: {0}")]
    StepRejected(String),
    #[error("no recurrences: {0}")]
    NoRecurrences(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::StepRejected(_)
                | Error::NoRecurrences(_)
                | Error::DegenerateFit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Error type shared by every module of the laboratory.
///
/// Variants mirror the failure modes of the numerical procedures: geometric
/// preconditions (grid validity, graph reach), analytic preconditions
/// (solvability, kernel separation), and search/integration failures.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("graph out of reach: {0}")]
    GraphOutOfReach(String),
    #[error("derivative order unavailable: {0}")]
    OrderUnavailable(String),
    #[error("insufficient domain: {0}")]
    InsufficientDomain(String),
    #[error("solvability violation: {0}")]
    SolvabilityViolation(String),
    #[error("ambiguous kernel: {0}")]
    AmbiguousKernel(String),
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
    #[error("recessive-branch filtering failure: {0}")]
    FilteringFailure(String),
    #[error("surface is not asymptotically conical: {0}")]
    NotConical(String),
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid preconditioner: entry {index} is {value} (must be > 0)")]
    InvalidPreconditioner { index: usize, value: f64 },

    #[error("objective is not strongly convex: {0}")]
    NoStrongConvexity(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("objective does not provide Hessian-vector products")]
    HessianUnavailable,

    #[error("reference solve failed after {iterations} iterations (gradient norm {grad_norm:e})")]
    ReferenceFailure { iterations: usize, grad_norm: f64 },

    #[error("preconditioner state corrupted: running entry {index} is {value}")]
    StateCorruption { index: usize, value: f64 },

    #[error("beta2 schedule undefined: {0}")]
    UndefinedSchedule(String),

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("invalid averaging weights: mu*F/(4*Gamma) = {0} is outside (0, 1)")]
    InvalidWeights(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("check precondition violated: {0}")]
    Precondition(String),

    #[error("all grid points diverged")]
    TuningFailure,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

use thiserror::Error;

/// Errors raised by model construction, scale-function evaluation and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("Laplace exponent has a pole at theta = {theta}")]
    PoleAtTheta { theta: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    #[error("roots {a} and {b} of kappa(theta) = {s} coincide; perturb the model")]
    DegenerateRoots { s: f64, a: String, b: String },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("q = 0 is not supported here: {0}")]
    QZero(&'static str),

    #[error("unsupported penalty `{0}`; expected exponential, linear or constant")]
    UnsupportedPenalty(String),

    #[error("drift_mean = {0} must be positive")]
    NonpositiveDrift(f64),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("retention alpha_{index} = {alpha} must lie strictly inside (0, 1)")]
    RetentionOutOfRange { index: usize, alpha: f64 },

    #[error("network is not in the cheap-reinsurance regime")]
    NotCheap,

    #[error("Monte-Carlo simulation requires sigma = 0 (got sigma^2 = {0})")]
    SigmaUnsupported(f64),

    #[error("an explicit horizon is required: {0}")]
    HorizonRequired(&'static str),

    #[error("barrier function still increasing at b_max = {b_max}; enlarge the search interval")]
    TailIncreasing { b_max: f64 },

    #[error("failed to parse input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

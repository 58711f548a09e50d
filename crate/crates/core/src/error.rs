use thiserror::Error;

/// Errors returned by allocplan operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty sample")]
    EmptySample,
    #[error("unbounded risk for group {group}: n_g = {n_g} with sigma2 > 0")]
    UnboundedRisk { group: usize, n_g: f64 },
    #[error("bisection did not converge after {steps} steps (bracket [{lo}, {hi}], residual {residual})")]
    NonConvergence {
        steps: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },
    #[error("zero-variance group {0}")]
    ZeroVarianceGroup(usize),
    #[error("unrepresented group {0}: allocation is zero but prevalence is positive")]
    UnrepresentedGroup(usize),
    #[error("group A must be the minority (gamma_A = {0} >= 0.5)")]
    NotMinority(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("Wishart moment undefined: n = {n} must exceed d + 2 = {}", d + 2)]
    WishartUndefined { n: u64, d: usize },
    #[error("generator failed for group {group}: {message}")]
    Generator { group: usize, message: String },
    #[error("evaluator failed for subset {subset}: {message}")]
    Evaluator { subset: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

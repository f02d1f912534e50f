use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: input validation failures and
/// budget/feasibility failures. The CLI maps them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid covering matrix: {0}")]
    InvalidMatrix(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("configuration has zero probability under the kernel: {0}")]
    ZeroNormalizer(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("no crossing found: {0}")]
    NoCrossing(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
}

impl Error {
    /// True for budget/feasibility errors, false for validation errors.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::Budget(_) | Error::NoCrossing(_) | Error::Eigen(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

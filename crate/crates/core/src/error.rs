use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node index {index} out of range for {n_nodes} nodes")]
    NodeOutOfRange { index: usize, n_nodes: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("K = {k} exceeds N = {n}")]
    TooManyClasses { k: usize, n: usize },
    #[error("responsibility row {0} is degenerate")]
    DegenerateResponsibilities(usize),
    #[error("exhaustive search needs {0} labelings, over budget")]
    SearchBudgetExceeded(u128),
    #[error("eigensolver did not converge after {0} iterations")]
    EigenNoConvergence(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Numerical failures, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConvergence(_) | Error::DegenerateResponsibilities(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;

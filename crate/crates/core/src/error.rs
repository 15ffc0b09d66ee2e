use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate basis: all {size} overlap eigenvalues fall below the cutoff {cutoff:e}")]
    DegenerateBasis { size: usize, cutoff: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("partial-wave sum not converged at l_max = {l_max} (tail estimate {tail:e})")]
    LMaxInsufficient { l_max: usize, tail: f64 },

    #[error("basis budget insufficient: {0}")]
    BudgetInsufficient(String),

    #[error("lemma precondition violated: {0}")]
    LemmaInapplicable(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("inconsistent verdict: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

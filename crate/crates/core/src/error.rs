use thiserror::Error;

/// Errors raised by the division engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("layer count mismatch: expected {expected}, found {found}")]
    LayerMismatch { expected: usize, found: usize },

    #[error("coordinate out of range: {0}")]
    OutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A solver loop invariant failed; on valid inputs this indicates a
    /// non-monotone oracle or an engine bug.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("infeasible assignment network: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

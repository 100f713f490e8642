use thiserror::Error;

use crate::rational::Rat;

/// Every failure mode of the library.
///
/// Precondition failures carry the exact offending quantity so callers (and
/// the CLI) can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("nonzero sum: expected 0, got {0}")]
    NonzeroSum(Rat),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point {0} lies outside every source piece")]
    UndefinedPoint(Rat),
    #[error("rearrangement search exhausted: {0}")]
    SearchExhausted(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("block {block}: {source}")]
    Block {
        block: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_block(self, block: impl Into<String>) -> Error {
        Error::Block {
            block: block.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through block wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Block { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

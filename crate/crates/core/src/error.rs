use thiserror::Error;

/// Errors shared by the expansion, interval, symbolic, pair and chaos layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid Lüroth digit {digit} at position {position} (digits must be >= 2)")]
    InvalidDigit { digit: u64, position: usize },
    #[error("empty digit word")]
    EmptyWord,
    #[error("digit does not fit in 64 bits")]
    DigitOverflow,
    #[error("stream has no eventual-period descriptor, only enclosures are available")]
    NotPeriodic,
    #[error("no orbit cycle found within {0} iterates")]
    CycleCapExceeded(usize),
    #[error("enclosure indecision: {0}")]
    Indecision(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("divergent series: {0}")]
    Divergent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

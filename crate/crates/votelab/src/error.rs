use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid game parameters (n <= 0, f = 0, c outside (0, 1]).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A certified truncation point exceeds the configured hard cap.
    #[error("truncation cap exceeded: lambda={lambda}, eps={eps} needs {needed} terms but max_terms={max_terms}")]
    TruncationCapExceeded {
        lambda: f64,
        eps: f64,
        needed: usize,
        max_terms: usize,
    },

    /// The requested structural quantity does not exist (e.g. interior
    /// maximum of the pivotal gain at f = 1, which is monotone).
    #[error("structure error: {0}")]
    Structure(String),

    /// A curve evaluation failed during root finding.
    #[error("curve evaluation failed at {at}: {source}")]
    CurveEval {
        at: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by lab operations.
#[derive(Debug, Error)]
pub enum LabError {
    /// A precondition on the mathematical inputs failed (scale too fine,
    /// empty set, violated hypothesis, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid or intermediate result would exceed the cell budget.
    #[error("cell budget exceeded: {required} cells required, budget is {budget}")]
    Budget { required: u128, budget: u64 },

    /// An algorithm variant cannot handle the input (e.g. log-domain fast
    /// path on a support that straddles zero).
    #[error("mode error: {0}")]
    Mode(String),

    /// Size caps of the exact discrete oracle.
    #[error("size cap exceeded: {0}")]
    Cap(String),

    /// Binary or text file could not be decoded.
    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

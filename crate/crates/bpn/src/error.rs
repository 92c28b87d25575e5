//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    /// A precondition on an argument value was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite value (NaN/Inf) appeared where finite data is required.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Lookup of a task that has no stored state (bias entry, key, head).
    #[error("unknown task {0}")]
    UnknownTask(usize),

    /// Attempt to register state for a task that already has some.
    #[error("task {0} already registered")]
    DuplicateTask(usize),

    /// A file did not match its expected binary layout.
    #[error("format error: {0}")]
    Format(String),

    /// Paired inputs disagree (e.g. image/label counts).
    #[error("inconsistent data: {0}")]
    Inconsistent(String),

    /// Configuration problems, all collected before reporting.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: impl ToString, rhs: impl ToString) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }
}

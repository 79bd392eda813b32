use thiserror::Error;

use crate::grid::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed JSON or a field of the wrong shape.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// The document parsed but violates one or more grid invariants.
    #[error("invalid grid: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("{0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// CAS lists that cannot be combined.
    #[error("mismatched CAS lists: {0}")]
    Mismatch(String),

    /// No admissible attack set remains under the given exclusion cuts.
    #[error("no admissible attack set of size {size} remains")]
    Exhausted { size: usize },

    /// The LP engine failed or returned a point violating the dispatch contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("oracle guard exceeded: {what} requires {required} evaluations (limit {limit})")]
    GuardExceeded {
        what: &'static str,
        required: f64,
        limit: f64,
    },
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

fn join_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

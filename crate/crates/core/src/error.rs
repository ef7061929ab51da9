use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Scopes, cardinalities or tables that do not fit together.
    #[error("inconsistent model: {0}")]
    ModelInconsistency(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The (working) evidence has probability zero, so no conditional exists.
    #[error("evidence has zero probability{}", .step.map(|s| format!(" at explanation step {s}")).unwrap_or_default())]
    ZeroProbabilityEvidence { step: Option<usize> },

    #[error("oracle needs {states} joint states, cap is {cap}")]
    OracleTooLarge { states: u128, cap: u64 },

    #[error("parse error at line {line}, token {token}: {message}")]
    Parse {
        line: usize,
        token: usize,
        message: String,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's input contract (wrong axis, out-of-domain value, bad ε, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition of {rule} does not hold for ({first}, {second})")]
    Precondition {
        rule: String,
        first: String,
        second: String,
    },

    #[error("degenerate belief: {0}")]
    DegenerateBelief(String),

    #[error("execution of {rule} is infeasible: zero precondition mass")]
    ExecutionInfeasible { rule: String },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than misuse of the API.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Contract(_))
    }
}

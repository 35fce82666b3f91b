use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("scenario field `{key}`: {reason}")]
    Field { key: String, reason: String },

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),

    #[error(transparent)]
    Solver(#[from] hedgecost::Error),
}

impl CliError {
    pub fn field(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Field {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use hedgecost::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Field { .. } => 2,
            CliError::Solver(e) => match e {
                E::NoConvergence { .. } => 3,
                E::SingularDenominator { .. } => 4,
                E::Domain(_) | E::InvalidParameter { .. } | E::DegenerateFamily | E::UnknownCheck(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } | CliError::ChecksFailed(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Numeric(#[from] logistic_chain::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    /// 2 for bad input, 1 for numerical or I/O failures and failed checks.
    pub fn exit_code(&self) -> i32 {
        use logistic_chain::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(E::InvalidParams(_) | E::NoPositiveEquilibrium { .. } | E::NotErgodic) => 2,
            CliError::Numeric(_) | CliError::Io { .. } | CliError::ChecksFailed { .. } => 1,
        }
    }
}

use expfun::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] expfun::Error),

    #[error("{what}: schema error at `{path}`: {message}")]
    Schema { what: String, path: String, message: String },

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error("{0}")]
    Usage(String),

    /// The run completed but some invariants failed.
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),

    /// The report was written but the regime hypotheses are not met.
    #[error("regime hypotheses not met: {0}")]
    NotApplicable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Hypothesis => 4,
            },
            CliError::Schema { .. } | CliError::Usage(_) => 2,
            CliError::Io(..) | CliError::ChecksFailed(_) => 3,
            CliError::NotApplicable(_) => 4,
        }
    }
}

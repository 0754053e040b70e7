use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
            CliError::Validation(_) => 5,
        }
    }
}

impl From<cohengine_core::Error> for CliError {
    fn from(e: cohengine_core::Error) -> Self {
        use cohengine_core::Error as E;
        match e {
            E::PureStateBoundary { .. } => CliError::Config(format!(
                "{e}; the positivity bound requires |c|^2 < p0*p1 for a mixed tape state"
            )),
            e if e.is_config_error() => CliError::Config(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}

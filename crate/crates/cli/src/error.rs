use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{operation}: {source}")]
    Numerical {
        operation: &'static str,
        #[source]
        source: ou_pacbayes::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Write { .. } => 1,
        }
    }
}

/// Attaches the operation name to a library error.
pub(crate) trait NumericalContext<T> {
    fn during(self, operation: &'static str) -> Result<T, CliError>;
}

impl<T> NumericalContext<T> for ou_pacbayes::Result<T> {
    fn during(self, operation: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { operation, source })
    }
}

/// Library errors raised while building inputs are configuration errors.
pub(crate) trait ConfigContext<T> {
    fn invalid(self, what: &str) -> Result<T, CliError>;
}

impl<T> ConfigContext<T> for ou_pacbayes::Result<T> {
    fn invalid(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(format!("{what}: {e}")))
    }
}

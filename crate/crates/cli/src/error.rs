use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error(transparent)]
    Core(#[from] stopflow::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 usage, 2 verification failure, 3 resource guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Core(stopflow::Error::ResourceLimit { .. }) => 3,
            CliError::Core(_) => 1,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration.
    #[error("{0}")]
    Config(String),

    /// A requested volume exceeds the dimension cap.
    #[error("{0}")]
    Capacity(String),

    /// Computed reports violate an invariant that must hold exactly.
    #[error("invariant violation: {}", .0.join("; "))]
    Invariant(Vec<String>),

    /// A numerical routine failed.
    #[error("{0}")]
    Compute(qsm_core::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Capacity(_) => 3,
            Self::Invariant(_) | Self::Compute(_) => 4,
        }
    }
}

impl From<qsm_core::Error> for CliError {
    fn from(e: qsm_core::Error) -> Self {
        match e {
            qsm_core::Error::Capacity { .. } => Self::Capacity(e.to_string()),
            other => Self::Compute(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

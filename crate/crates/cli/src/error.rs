use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ict_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(ict_core::Error::Parameter { .. } | ict_core::Error::Domain(_)) => 2,
            CliError::Core(ict_core::Error::Numerical(_)) => 3,
            CliError::Core(ict_core::Error::Infeasible(_)) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "numerical",
            4 => "infeasible",
            _ => "io",
        }
    }
}

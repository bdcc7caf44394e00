use thiserror::Error;

/// Failures of a command-line run, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] exofrac_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration and input errors, 3 for numerical failures, 4
    /// for I/O.
    pub fn exit_code(&self) -> i32 {
        use exofrac_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(e) => match e {
                E::Io(_) => 4,
                E::Parameter(_) | E::Geometry(_) | E::Parse { .. } | E::Validation(_) => 2,
                E::Solver(_) | E::Domain(_) => 3,
            },
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] speedscale::Error),

    #[error("instance checksum {found} does not match the schedule's {expected}")]
    Checksum { expected: String, found: String },

    #[error("{0} violation(s) found")]
    Violations(usize),
}

impl CliError {
    /// 0 ok, 1 violations, 2 infeasible, 3 I/O, format or usage, 4 checksum.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violations(_) => 1,
            CliError::Core(speedscale::Error::Infeasible | speedscale::Error::NoConfiguration(_)) => 2,
            CliError::Checksum { .. } => 4,
            CliError::Usage(_) | CliError::Io(_) | CliError::Format(_) | CliError::Core(_) => 3,
        }
    }
}

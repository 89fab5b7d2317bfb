use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(#[from] tnt_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("integration: {0}")]
    Integration(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code associated with the error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) => 2,
            Error::Integration(_) => 3,
            Error::Verification(_) => 4,
            Error::Io(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

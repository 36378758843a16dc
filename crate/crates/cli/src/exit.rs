use stc_core::StcError;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: DATA,
            message: message.into(),
        }
    }
}

impl From<StcError> for CliError {
    fn from(e: StcError) -> Self {
        let code = match e {
            StcError::Numerical(_) | StcError::NonFinite(_) => NUMERICAL,
            StcError::Config(_) | StcError::InvalidArgument(_) => USAGE,
            StcError::Shape(_)
            | StcError::Data(_)
            | StcError::Parse { .. }
            | StcError::Checkpoint(_)
            | StcError::Io { .. } => DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Attaches a context prefix while keeping the exit code.
pub trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| {
            let mut err: CliError = e.into();
            err.message = format!("{what}: {}", err.message);
            err
        })
    }
}

use std::fmt;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// A failed command: message for stderr plus process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError { code: EXIT_USAGE, message: format!("error: {msg}") }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError { code: EXIT_DATA, message: format!("error: {msg}") }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<hqnet::Error> for CliError {
    fn from(e: hqnet::Error) -> Self {
        use hqnet::Error::*;
        let code = match &e {
            InvalidParameter(_) => EXIT_USAGE,
            Divergence { .. } | Quadrature { .. } | RootFinding(_) | ZeroDenominator(_) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        };
        CliError { code, message: format!("error: {e}") }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

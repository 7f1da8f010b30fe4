use std::fmt;
use std::path::Path;

use heavytail::TailError;

/// Process exit codes.
pub mod code {
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const DOMAIN: u8 = 4;
    pub const IO: u8 = 5;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(code::PARSE, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(code::IO, format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with where the error happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<TailError> for CliError {
    fn from(e: TailError) -> Self {
        let code = match e {
            TailError::Config(_) => code::PARSE,
            _ => code::DOMAIN,
        };
        CliError::new(code, e.to_string())
    }
}

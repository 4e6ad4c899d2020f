use std::fmt;

use madlab::Error;

pub const GENERIC: u8 = 1;
pub const SCHEMA: u8 = 2;
pub const NUMERIC: u8 = 3;
pub const CHECKPOINT: u8 = 4;
pub const TOO_FEW_REPLICATES: u8 = 5;

/// An error message with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema(_) => SCHEMA,
            Error::NonFinite(_) => NUMERIC,
            Error::HashMismatch { .. } => CHECKPOINT,
            _ => GENERIC,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(GENERIC, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::new(GENERIC, e.to_string())
    }
}

/// Prefixes the message with the file it concerns, keeping the code.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn context(self, what: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| {
            let f = e.into();
            Failure::new(f.code, format!("{what}: {}", f.message))
        })
    }
}

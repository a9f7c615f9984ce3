use std::fmt;

use menger_core::Error;

/// Failure of a run, mapped to the process exit code.
#[derive(Debug)]
pub enum Fail {
    /// Malformed or inconsistent input (exit 2).
    Validation(String),
    /// A sampler or solver gave up on a pathological configuration (exit 3).
    Numerical(String),
    /// Reading or writing files (exit 1).
    Io(String),
}

impl Fail {
    pub fn exit_code(&self) -> i32 {
        match self {
            Fail::Validation(_) => 2,
            Fail::Numerical(_) => 3,
            Fail::Io(_) => 1,
        }
    }
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Validation(m) => write!(f, "validation error: {m}"),
            Fail::Numerical(m) => write!(f, "numerical failure: {m}"),
            Fail::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Diagnostic(_) => Fail::Numerical(e.to_string()),
            _ => Fail::Validation(e.to_string()),
        }
    }
}

pub fn invalid<T>(msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail::Validation(msg.into()))
}

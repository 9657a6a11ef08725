//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

/// Errors surfaced by this crate.
///
/// `Contract` marks caller mistakes (bad dimensions, invalid parameters);
/// `Io` and `Format` mark failures while reading or writing artifact files.
#[derive(Debug)]
pub enum Error {
    /// An interface contract was violated by the caller.
    Contract(String),
    /// An operating-system I/O failure, with the path involved.
    Io { path: PathBuf, source: io::Error },
    /// A file was readable but its contents do not parse.
    Format(String),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Io { path, source } => write!(f, "i/o failure on {}: {source}", path.display()),
            Error::Format(msg) => write!(f, "malformed file: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

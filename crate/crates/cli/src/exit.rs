use std::fmt;
use std::io;
use std::path::Path;

use archivesafe_core::Error;
use archivesafe_service::ClientError;

pub const OK: u8 = 0;
pub const IO: u8 = 2;
pub const CONFIG: u8 = 3;
pub const NO_SOLUTION: u8 = 4;
pub const CORRUPT: u8 = 5;
pub const CANNOT_REDUCE: u8 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: CONFIG,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: IO,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn core(path: &Path, e: Error) -> Self {
        Self {
            code: core_code(&e),
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Exit status for a core error raised while handling an existing file.
pub fn core_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => IO,
        Error::DifficultyOutOfRange { .. } | Error::SaltRequired | Error::MessageTooLong { .. } => {
            CONFIG
        }
        Error::ExhaustedNoSolution { .. } | Error::Cancelled { .. } => NO_SOLUTION,
        Error::CannotReduceDifficulty { .. } => CANNOT_REDUCE,
        Error::UnknownSuite(_)
        | Error::PaddingInvalid
        | Error::BadMagic
        | Error::UnsupportedVersion(_)
        | Error::TruncatedInput
        | Error::ChecksumMismatch
        | Error::MalformedLengths(_)
        | Error::ReservedFlags(_)
        | Error::NonCanonical(_) => CORRUPT,
    }
}

pub fn client_code(e: &ClientError) -> u8 {
    match e {
        ClientError::SaltRequired => CONFIG,
        ClientError::Transport(_) | ClientError::InvalidResponse(_) => IO,
        ClientError::Server { status: 422, .. } => NO_SOLUTION,
        ClientError::Server {
            status: 400 | 403, ..
        } => CONFIG,
        ClientError::Server { .. } => IO,
        ClientError::ServerReturnedInvalidSeed => CORRUPT,
    }
}

use std::fmt;

use biphoton_core::Error;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::data(message)
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    /// Prefixes the message with what was being done.
    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Format { .. } | Error::GridMismatch(_) | Error::Io(_) => EXIT_DATA,
            Error::InvalidGrid(_)
            | Error::InvalidParameter(_)
            | Error::UnderResolved { .. }
            | Error::OracleScale(_)
            | Error::InvalidZernike { .. }
            | Error::MemoryGuard(_)
            | Error::UseWaistPlane
            | Error::Json(_) => EXIT_CONFIG,
            Error::ZeroField
            | Error::SingularCurvature
            | Error::EmptyIntensity
            | Error::FeaturelessInput
            | Error::NoCorrelatedCounts => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

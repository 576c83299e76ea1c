use std::fmt;

use isosense_core::Error as CoreError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Data = 2,
    Config = 3,
    Internal = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn data(message: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Data,
            message: message.to_string(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Config,
            message: message.to_string(),
        }
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Internal,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Classifies an error raised while computing on loaded data. Problems with
/// requested parameters are configuration errors; problems with the numbers
/// themselves are data errors.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::InvalidArgument(_) | CoreError::RankDeficient { .. } | CoreError::InsufficientSamples { .. } => {
                ExitKind::Config
            }
            CoreError::Io { .. }
            | CoreError::Parse { .. }
            | CoreError::DuplicateOccurrence { .. }
            | CoreError::Json { .. }
            | CoreError::Shape(_)
            | CoreError::NonFinite { .. }
            | CoreError::Truncated { .. }
            | CoreError::DegenerateVector { .. }
            | CoreError::NoVariance
            | CoreError::NoConvergence(_) => ExitKind::Data,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

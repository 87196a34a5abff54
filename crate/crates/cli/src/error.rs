use std::fmt;

use toda_core::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    VerifyFailed = 1,
    InvalidInput = 2,
    Degenerate = 3,
    BlowUp = 4,
    NonConvergence = 5,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Tag printed inside `error[...]`.
    pub fn tag(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::VerifyFailed => "verify-failed",
            Exit::InvalidInput => "invalid-input",
            Exit::Degenerate => "degenerate",
            Exit::BlowUp => "blow-up",
            Exit::NonConvergence => "non-convergence",
        }
    }
}

/// A failure with its exit status. Renders as one line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Exit::InvalidInput, message)
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: Vec<&str> = self
            .message
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        write!(f, "error[{}]: {}", self.exit.tag(), flat.join("; "))
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match &e {
            Error::Singular(_) | Error::Internal(_) => Exit::Degenerate,
            Error::BlowUp { .. } => Exit::BlowUp,
            Error::Convergence { .. } => Exit::NonConvergence,
            _ => Exit::InvalidInput,
        };
        CliError::new(exit, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

//! Process exit codes.

use lqmf::Error;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DICHOTOMY: u8 = 3;
pub const EXIT_INPUT: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    /// Unreadable, malformed or inconsistent input, or a bad flag value.
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, prefix) = match &e {
            Error::NotSymmetric { .. }
            | Error::InvalidProblem(_)
            | Error::NonPositiveR { .. }
            | Error::StabilizabilityFailure { .. } => (EXIT_VALIDATION, "validation failed"),
            Error::ImaginaryAxisEigenvalue { .. } => {
                (EXIT_DICHOTOMY, "dichotomy failure (imaginary axis)")
            }
            Error::DichotomySplitFailure { .. } => {
                (EXIT_DICHOTOMY, "dichotomy failure (unbalanced split)")
            }
            Error::GraphSubspaceFailure { .. } => {
                (EXIT_DICHOTOMY, "dichotomy failure (graph subspace)")
            }
            Error::DimensionMismatch { .. }
            | Error::NonSquare { .. }
            | Error::NonFinite
            | Error::InvalidConfig(_) => (EXIT_INPUT, "invalid input"),
            _ => (EXIT_OTHER, "solver failure"),
        };
        Self {
            code,
            message: format!("{prefix}: {e}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("i/o error: {e}"))
    }
}

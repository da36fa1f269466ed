use std::fmt;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is defined.
    #[error("{quantity} = {value:e} is outside the valid domain ({constraint})")]
    Domain {
        quantity: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The request is well formed but asks for physics that is not modelled.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed input data (sample lists, brackets, configuration values).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Arithmetic between quantities of different dimensions.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch {
        left: crate::constants::Dimension,
        right: crate::constants::Dimension,
    },

    /// An iterative computation failed to converge.
    #[error("convergence failure: {message}")]
    Convergence {
        message: String,
        estimates: Vec<f64>,
    },

    /// A least-squares fit did not describe the data well enough.
    #[error("poor fit: relative residual {residual:.3e} exceeds {limit:.3e}")]
    PoorFit {
        residual: f64,
        limit: f64,
        data: Vec<(f64, f64)>,
    },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            constraint,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain { .. } => ErrorKind::Domain,
            Error::Unsupported(_) => ErrorKind::Unsupported,
            Error::InvalidInput(_) => ErrorKind::InvalidInput,
            Error::DimensionMismatch { .. } => ErrorKind::DimensionMismatch,
            Error::Convergence { .. } => ErrorKind::Convergence,
            Error::PoorFit { .. } => ErrorKind::PoorFit,
        }
    }

    /// True for errors caused by bad arguments rather than by a computation
    /// that ran and failed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.kind(),
            ErrorKind::Domain
                | ErrorKind::Unsupported
                | ErrorKind::InvalidInput
                | ErrorKind::DimensionMismatch
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Domain,
    Unsupported,
    InvalidInput,
    DimensionMismatch,
    Convergence,
    PoorFit,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Domain => "domain",
            ErrorKind::Unsupported => "unsupported",
            ErrorKind::InvalidInput => "invalid-input",
            ErrorKind::DimensionMismatch => "dimension-mismatch",
            ErrorKind::Convergence => "convergence",
            ErrorKind::PoorFit => "poor-fit",
        };
        f.write_str(s)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

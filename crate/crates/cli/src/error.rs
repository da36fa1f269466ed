use serde_json::{json, Value};

use casimir_core::Error;

/// Validation failures exit with this status.
pub const EXIT_VALIDATION: i32 = 2;
/// Computations that ran and failed exit with this status.
pub const EXIT_COMPUTATION: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Bad command-line or configuration input.
    Config(String),
    Io(String),
    /// A computation finished but did not succeed, e.g. a collapsed run.
    Failed {
        kind: &'static str,
        message: String,
        details: Value,
    },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_validation() => EXIT_COMPUTATION,
            CliError::Failed { .. } => EXIT_COMPUTATION,
            _ => EXIT_VALIDATION,
        }
    }

    /// One-line JSON error record for stderr.
    pub fn record(&self) -> Value {
        let (kind, message, details) = match self {
            CliError::Core(e) => {
                let details = match e {
                    Error::Convergence { estimates, .. } => json!({ "estimates": estimates }),
                    Error::PoorFit {
                        residual,
                        limit,
                        data,
                    } => {
                        json!({ "residual": residual, "limit": limit, "data": data })
                    }
                    Error::Domain {
                        quantity,
                        value,
                        constraint,
                    } => {
                        json!({ "quantity": quantity, "value": value, "constraint": constraint })
                    }
                    _ => Value::Null,
                };
                (e.kind().to_string(), e.to_string(), details)
            }
            CliError::Config(m) => ("invalid-input".to_string(), m.clone(), Value::Null),
            CliError::Io(m) => ("io".to_string(), m.clone(), Value::Null),
            CliError::Failed {
                kind,
                message,
                details,
            } => (kind.to_string(), message.clone(), details.clone()),
        };
        json!({
            "error": {
                "kind": kind,
                "message": message,
                "exit_code": self.exit_code(),
                "details": details,
            }
        })
    }
}

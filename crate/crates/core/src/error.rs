use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter or input failed validation.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A cell carries a non-positive (or non-finite) density where a positive one is required.
    #[error("non-positive density {value} in cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },

    /// A time step could not be completed.
    #[error("step failed: {0}")]
    Step(String),

    /// A run guard tripped.
    #[error("guard tripped at t={time}: {reason} (rho_min={rho_min}, rho_max={rho_max})")]
    Guard {
        time: f64,
        reason: String,
        rho_min: f64,
        rho_max: f64,
    },

    /// Configuration text could not be parsed.
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// File system failure.
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    /// Malformed snapshot or series file.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

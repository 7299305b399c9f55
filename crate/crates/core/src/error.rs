use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: configuration and validation
/// problems (2), unphysical-regime diagnostics (3) and numerical failures (4).
#[derive(Debug, Error)]
pub enum Error {
    /// The configuration document could not be parsed at all.
    #[error("config parse error: {0}")]
    Parse(String),

    /// An input violated a documented invariant. `field` names the offending
    /// quantity.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// Inputs are formally valid but land in a regime the theory rejects,
    /// e.g. negative photon probabilities beyond their uncertainty.
    #[error("unphysical regime: {0}")]
    Unphysical(String),

    /// A numerical procedure failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation { field, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

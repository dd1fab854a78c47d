use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("servo found no lock point: {0}")]
    NoLock(String),

    #[error("field-map reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("tilt sensitivity unresolved: |slope| = {slope:e} < 10 x fit sigma {sigma:e}")]
    UnresolvedSensitivity { slope: f64, sigma: f64 },

    #[error("numerical integration failed after {steps} steps (step {step_s:e} s): {reason}")]
    Numeric { reason: String, steps: usize, step_s: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical machinery (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoLock(_) | Error::Reconstruction(_) | Error::UnresolvedSensitivity { .. } | Error::Numeric { .. }
        )
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OutOfRange(_) => "out_of_range",
            Error::NoLock(_) => "no_lock",
            Error::Reconstruction(_) => "reconstruction",
            Error::UnresolvedSensitivity { .. } => "unresolved_sensitivity",
            Error::Numeric { .. } => "numeric",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

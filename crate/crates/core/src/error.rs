use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("calibration quality error: {0}")]
    CalibrationQuality(String),

    #[error("schema error in field `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("solver did not converge after {iterations} sweeps (last update {last_update:.3e} V, residual {residual:.3e} A)")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        residual: f64,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn schema(field: &str, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Singular(_))
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

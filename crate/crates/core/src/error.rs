//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A node or edge index does not exist in the network.
    #[error("index out of range: {what} {index} (network has {n} nodes)")]
    Index {
        what: &'static str,
        index: usize,
        n: usize,
    },

    /// Vector/matrix dimensions disagree.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A network file violates the schema or an invariant.
    #[error("network file error: {0}")]
    NetworkFile(String),

    /// Integration produced non-finite phases.
    #[error("numeric blowup at t = {t}: phases became non-finite; reduce dt")]
    NumericBlowup { t: f64 },

    /// A denominator that must be nonzero was zero.
    #[error("division undefined: {0}")]
    DivisionUndefined(&'static str),

    /// Regression cannot be fitted (degenerate regressor).
    #[error("fit undefined: {0}")]
    FitUndefined(&'static str),

    /// The wavelength-shift formula is singular at zero action rate.
    #[error("wavelength shift undefined: qoppa * dS/dt is zero")]
    UndefinedShift,

    /// Pre/post-selection matched no trajectories.
    #[error("empty selection: no trajectory satisfies both predicates")]
    EmptySelection,

    /// A series is too short for the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Experiment configuration is invalid.
    #[error("invalid config: {0}")]
    Config(String),

    /// A record directory is missing data needed for an export.
    #[error("missing data: {0}")]
    MissingData(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Index { .. } => "index",
            Error::Dimension { .. } => "dimension",
            Error::NetworkFile(_) => "network-file",
            Error::NumericBlowup { .. } => "numeric-blowup",
            Error::DivisionUndefined(_) => "division-undefined",
            Error::FitUndefined(_) => "fit-undefined",
            Error::UndefinedShift => "undefined-shift",
            Error::EmptySelection => "empty-selection",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Config(_) => "config",
            Error::MissingData(_) => "missing-data",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

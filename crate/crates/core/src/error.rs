use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trap parameter `{name}` = {value}: {reason}")]
    InvalidTrap {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("tridiagonal eigen-iteration failed to converge for level {level} (residual {residual:.3e})")]
    NoConvergence { level: usize, residual: f64 },

    #[error("grid looks under-resolved: highest bound energy moved from {coarse} to {fine} under refinement")]
    UnderResolved { coarse: f64, fine: f64 },

    #[error("invalid occupation: {0}")]
    InvalidOccupation(String),

    #[error("chemical potential could not be bracketed: {0}")]
    Unbracketable(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel eigenvalue {value:.3e} outside [0, 1] beyond roundoff; overlaps are not orthonormal")]
    KernelSpectrum { value: f64 },

    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

/// A rejected configuration value, located by key path and (when known)
/// line in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl Error {
    /// Process exit status: 2 for configuration problems, 1 for everything
    /// else (numerical failures, unwritable output).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Scenario { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    pub(crate) fn in_context(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

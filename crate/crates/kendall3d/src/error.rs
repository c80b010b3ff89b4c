//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ShapeError>;

/// Everything that can go wrong while working with shapes.
#[derive(Error, Debug)]
pub enum ShapeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate configuration: Helmertized norm {norm:.3e} is below 1e-12 (all landmarks coincide)")]
    DegenerateConfiguration { norm: f64 },

    #[error("singular shape: {0}")]
    SingularShape(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("no unique logarithm: inner product {inner:.6} is at or below the antipodal cut-off")]
    NoUniqueLogarithm { inner: f64 },

    #[error("vector is not horizontal: violation {violation:.3e} exceeds tolerance {tol:.1e}")]
    NotHorizontal { violation: f64, tol: f64 },

    #[error("degenerate plane: {0}")]
    DegeneratePlane(String),

    #[error("ill-conditioned Kendall basis: Gram condition number {cond:.3e}")]
    IllConditionedBasis { cond: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("simulation spec rejected: {0}")]
    Simulation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ShapeError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ShapeError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {n} qubits, cap is {cap}")]
    Capacity { what: &'static str, n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("zero-norm vector cannot be normalized")]
    ZeroNorm,

    #[error("invalid argument `{field}`: {message}")]
    InvalidArgument { field: &'static str, message: String },

    #[error("domain error in {op}: {message}")]
    Domain { op: &'static str, message: String },

    #[error("{op} did not converge: {message}")]
    Convergence { op: &'static str, message: String },

    #[error("POVM effects do not sum to identity (deviation {deviation:.3e})")]
    PovmIncomplete { deviation: f64 },

    #[error("measured observables do not commute")]
    NonCommuting,

    #[error("ill-conditioned determinant (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("no crossing found in scan window [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("invariance check failed: before {before:.12e}, after {after:.12e}")]
    InvarianceViolated { before: f64, after: f64 },

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument { field, message: message.into() }
    }

    pub(crate) fn domain(op: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { op, message: message.into() }
    }
}

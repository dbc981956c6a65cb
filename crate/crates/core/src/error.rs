use thiserror::Error;

/// Errors raised by the library.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown family kind `{0}`")]
    UnknownFamily(String),

    #[error("invalid dimension {dim} for family {family}")]
    InvalidDimension { family: String, dim: usize },

    #[error("parameter {coords:?} lies outside the domain of {owner}")]
    Domain { owner: String, coords: Vec<f64> },

    #[error("non-finite coordinate in {0:?}")]
    NonFinite(Vec<f64>),

    #[error("parameter layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid skew parameter {0}")]
    InvalidSkew(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e}, last iterate {last:?})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("integration failed after {evals} evaluations: estimate {estimate} with error {error:e}")]
    Integration {
        evals: usize,
        estimate: f64,
        error: f64,
    },

    #[error("invalid integration scheme: {0}")]
    InvalidScheme(String),

    #[error("generator ordering violated: F1 - F2 = {gap:e} at {at:?}")]
    GeneratorOrder { gap: f64, at: Vec<f64> },

    #[error("deformed generator is not convex: {0}")]
    NotConvex(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the lattice, solver and reporting layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not supported: the lattice must have d >= 3")]
    Dimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain mismatch: expected d={expected_dim} R={expected_radius}, got d={dim} R={radius}")]
    DomainMismatch { expected_dim: usize, expected_radius: usize, dim: usize, radius: usize },

    #[error("point {0:?} lies outside the box")]
    OutsideBox(Vec<i64>),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e}, target {tol:e})")]
    NotConverged { iterations: usize, residual: f64, tol: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} steps; smallest eigenvalue bracketed in [{lower:e}, {upper:e}]")]
    EigenNotConverged { iterations: usize, lower: f64, upper: f64 },

    #[error("system of {sites} sites exceeds the dense oracle cap of {cap}")]
    TooLarge { sites: usize, cap: usize },

    #[error("Green's function is not positive at {0:?}")]
    NonPositiveGreen(Vec<i64>),

    #[error("region is empty: {0}")]
    EmptyRegion(String),

    #[error("region does not fit the box: {0}")]
    RegionOutsideBox(String),

    #[error("truncation sequence is not monotone in the box radius at {0:?}")]
    NonMonotoneTruncation(Vec<i64>),

    #[error("kernel violates the symmetry K_jk(x) = K_kj(-x): {0}")]
    KernelAsymmetry(String),

    #[error("realization {index} (seed {seed:#018x}) failed: {source}")]
    Realization {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite fit: {0}")]
    NonFiniteFit(String),

    #[error("malformed field file at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

use thiserror::Error;

/// Errors produced by the numerical kernels and the sampling/estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("matrix is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("state is not normalized (trace {trace})")]
    NotNormalized { trace: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("partial-trace normalizer is singular")]
    SingularNormalizer,

    #[error("operator set is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("environment dimension {d_e} is smaller than the Choi rank {rank}")]
    EnvironmentTooSmall { d_e: usize, rank: usize },

    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

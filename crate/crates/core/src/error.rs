use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("smooth term is not twice differentiable")]
    NotTwiceDifferentiable,

    #[error("operation requires the identity coupling matrix")]
    CouplingNotIdentity,

    #[error("coupling matrix is rank deficient: rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("operation requires a quadratic smooth term")]
    NotQuadratic,

    #[error("strong-convexity modulus must be positive (m_f = {0})")]
    NotStronglyConvex(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("singular formula: {0}")]
    Singular(String),

    #[error("trajectory converged too fast to fit a rate")]
    ConvergedTooFast,

    #[error("trajectory is missing {0} diagnostics")]
    MissingDiagnostics(&'static str),

    #[error("reference solve inconsistent: F_mu(x) = {value} below F* = {optimum}")]
    InconsistentReference { value: f64, optimum: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the numerical core and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry array has length {len}, which is not a square number of entries")]
    NotSquare { len: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("operator is not traceless (trace {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("direction is numerically zero")]
    ZeroDirection,

    #[error("state is not bipartite")]
    NotBipartite,

    #[error("local dimension must be at least {min}, got {d}")]
    LocalDimension { d: usize, min: usize },

    #[error("vector is not maximally entangled (reduced-state deviation {deviation:.3e})")]
    NotMaximallyEntangled { deviation: f64 },

    #[error("Hermitian eigensolver did not converge for a {dim}x{dim} input")]
    EigenNoConvergence { dim: usize },

    #[error("operator is a multiple of the identity")]
    ScalarOperator,

    #[error("invariant direction: the perturbation has the form I⊗Ξ and keeps every CQ state CQ")]
    InvariantDirection,

    #[error("no admissible lambda above {floor:e}: {diagnostics}")]
    NoAdmissibleLambda { floor: f64, diagnostics: String },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("epsilon {epsilon} does not yield a positive POVM after {halvings} halvings")]
    EpsilonTooLarge { epsilon: f64, halvings: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the command-line interface: 1 for mathematical or
    /// constructive failures, 2 for I/O and validation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ScalarOperator
            | Error::InvariantDirection
            | Error::NoAdmissibleLambda { .. }
            | Error::Construction(_)
            | Error::EpsilonTooLarge { .. }
            | Error::EigenNoConvergence { .. } => 1,
            _ => 2,
        }
    }
}

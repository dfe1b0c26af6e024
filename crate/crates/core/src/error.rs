use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported spatial dimension {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("no quadrature rule of order {order} on the {dim}-simplex (maximum is {max})")]
    UnsupportedOrder {
        dim: usize,
        order: usize,
        max: usize,
    },

    #[error("element {0} is degenerate (zero Jacobian determinant)")]
    DegenerateElement(usize),

    #[error("refinement closure did not terminate after {0} bisection rounds")]
    RefinementDiverged(usize),

    #[error("local eigenvalue problem failed on element {0}")]
    EigenFailure(usize),

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("unknown problem '{0}' (expected smooth, oscillatory, peak or custom)")]
    UnknownProblem(String),

    #[error("the problem has no exact solution")]
    MissingExactSolution,

    #[error("index inconsistency: {0}")]
    Index(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

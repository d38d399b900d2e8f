use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("unknown group element {0}")]
    UnknownElement(usize),

    #[error("product of elements {0} and {1} lies outside the stored word ball")]
    OutsideBall(usize, usize),

    #[error("map is not equivariant: covariance residual {residual:.3e} at element {element}")]
    NotEquivariant { element: String, residual: f64 },

    #[error("matrix is singular (smallest singular value {0:.3e})")]
    Singular(f64),

    #[error("form is not positive definite (smallest eigenvalue {min_eigenvalue:.3e}, kernel direction {kernel:?})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        kernel: Vec<f64>,
    },

    #[error("not a complex structure: {0}")]
    NotComplexStructure(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

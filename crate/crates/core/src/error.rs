use thiserror::Error;

#[derive(Debug, Error)]
pub enum WgError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported space configuration: {family:?} with degree {degree}")]
    UnsupportedConfig {
        family: crate::fespace::Family,
        degree: usize,
    },

    #[error("no quadrature rule of degree {0} (maximum is {max})", max = crate::quadrature::MAX_DEGREE)]
    UnsupportedDegree(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("coefficient tensor on cell {cell} is not symmetric positive definite")]
    NonSpdCoefficient { cell: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("preconditioner defect: contraction estimate {rho} is not below 1")]
    PreconditionerDefect { rho: f64 },

    #[error("coarse solver requires a mesh hierarchy with {needed} levels, got {got}")]
    MissingHierarchy { needed: usize, got: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WgError>;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window sides {width} x {height} are not integer multiples of cell size {cell}")]
    MisalignedWindow { width: f64, height: f64, cell: f64 },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("model/data mismatch: {0}")]
    ModelMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible data: {0}")]
    InfeasibleData(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numeric error at quadrature node {node}: {message}")]
    Numeric { node: usize, message: String },

    #[error("ill-conditioned matrix (condition estimate {condition:e}): {message}")]
    IllConditioned { condition: f64, message: String },

    #[error("identifiability failure (condition estimate {condition:e}): {message}")]
    Identifiability { condition: f64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

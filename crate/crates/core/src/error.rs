use thiserror::Error;

/// Everything that can go wrong while building operators, planning or estimating.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlqError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input at line {line}: {message}")]
    MalformedInput { line: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dense oracle limited to n <= {cap}, got n = {n}")]
    OracleTooLarge { n: usize, cap: usize },

    #[error("function not finite at support point {point}")]
    Domain { point: f64 },

    #[error(
        "degenerate spectrum: lambda_min == lambda_max, the matrix is a multiple of the identity"
    )]
    DegenerateSpectrum,

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("no interior minimizer of the allocation objective for C = {c}")]
    NoInteriorMinimizer { c: f64 },

    #[error("relative target undefined when log det A = 0")]
    UndefinedTarget,

    #[error("i/o error: {0}")]
    Io(String),
}

impl SlqError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SlqError::NotSpd(_) | SlqError::NumericalFailure(_) | SlqError::Domain { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for SlqError {
    fn from(e: std::io::Error) -> Self {
        SlqError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SlqError>;

use thiserror::Error;

/// Errors produced by the estimation engine and its front ends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{param}` out of range: {constraint}")]
    ParameterOutOfRange {
        param: &'static str,
        constraint: &'static str,
    },

    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("sample too small: n = {n}, need at least {min}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("quadrature did not converge: estimated error {error:e} exceeds tolerance {tol:e}")]
    QuadratureNonconvergence { error: f64, tol: f64 },

    #[error("point {x} outside evaluation grid [{lo}, {hi}]")]
    OutOfGrid { x: f64, lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window has zero norm; cannot rescale to w_min = {w_min}")]
    WindowCollapse { w_min: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bernoulli noise needs f(x) in [0, 1], got {value}")]
    ProbabilityOutOfRange { value: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("quadrature over {dim} dimensions is not supported (max {max})")]
    QuadratureTooLarge { dim: usize, max: usize },

    #[error("not enough usable points: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("budget exhausted")]
    BudgetExhausted,

    #[error("matrix is singular")]
    Singular,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config:{}", .issues.iter().map(|i| format!("\n  - {i}")).collect::<String>())]
    Config { issues: Vec<String> },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("seed {seed}: {source}")]
    Seed { seed: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

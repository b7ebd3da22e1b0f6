use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CeicError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {context} at t = {t}")]
    NonFinite { context: &'static str, t: f64 },
    #[error("singular matrix in {context} (smallest singular value {sigma_min:e})")]
    Singular { context: String, sigma_min: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cascade construction failed at level {level}: {reason}")]
    Construction { level: usize, reason: String },
    #[error("BEM solver failed at level {level}: {reason}")]
    Bem { level: usize, reason: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CeicError>;

impl From<std::io::Error> for CeicError {
    fn from(e: std::io::Error) -> Self {
        CeicError::Io(e.to_string())
    }
}

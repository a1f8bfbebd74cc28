use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid bit string: {0}")]
    InvalidBits(String),

    #[error("invalid problem parameters: {0}")]
    InvalidProblem(String),

    #[error("invalid operator parameters: {0}")]
    InvalidOperator(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("policy violated the model: {0}")]
    Policy(String),

    #[error("invalid estimator input: {0}")]
    Estimator(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A commutator was requested on a polynomial with quadratic terms.
    #[error("commutator requires degree <= 1 inputs, {0} has quadratic terms")]
    Degree(&'static str),

    #[error("operation requires natural units (hbar = c = 1): {0}")]
    UnitMode(String),

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: {0}")]
    Division(String),

    #[error("invalid step: {0}")]
    Step(String),

    #[error("energy series does not cover [{start}, {end}]")]
    Coverage { start: f64, end: f64 },

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("invalid truncation size: {0}")]
    Size(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
}

use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative is unbounded at {at} for the {family} penalty")]
    UnboundedDerivative { family: &'static str, at: f64 },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("rank deficient: {0}")]
    Rank(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("enumeration needs {required} candidates, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },
    #[error("oracle mode refused: {0}")]
    OracleRefused(String),
    #[error("bisection did not converge, bracket [{lo}, {hi}]")]
    NonConvergence { lo: f64, hi: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = core::result::Result<T, Error>;

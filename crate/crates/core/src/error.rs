use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("enumeration of {volume} points exceeds the cap of {cap}")]
    CapExceeded { volume: u128, cap: u128 },

    #[error("interval does not intersect the domain box")]
    EmptyIntersection,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("table {item} is not concave: forward difference increases at {at}")]
    NonConcaveTable { item: usize, at: usize },

    #[error("matroid has more than {cap} bases")]
    BaseEnumerationCapExceeded { cap: usize },

    #[error("base list violates the exchange axiom: {0}")]
    ExchangeAxiomViolation(String),

    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),

    #[error("direction {direction} at step {step} leaves the feasible region")]
    InfeasibleDirection { step: usize, direction: usize },

    #[error("budget {got} is below the required minimum {required}")]
    BudgetTooSmall { required: u64, got: u64 },

    #[error("value {value} at {point} lies outside [0, 1]")]
    RangeViolation { point: String, value: f64 },

    #[error("ground set of size {n} exceeds the limit {limit}")]
    GroundSetTooLarge { n: usize, limit: usize },

    #[error("query at {0} is outside the effective domain")]
    OutsideDomain(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("group too large for fixed-width storage: {0}")]
    Overflow(String),

    #[error("enumeration budget exceeded: need {needed}, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("intractable: {0}")]
    Intractable(String),

    #[error("index {index} out of range for an instance of size {r}")]
    Index { index: usize, r: usize },

    #[error("operation requires an instance over F_2^m")]
    NotXor,

    #[error("k2 = {k2} must lie in [{lo}, {hi}] for k1 = {k1}")]
    InvalidKRange { k1: usize, k2: usize, lo: usize, hi: usize },

    #[error("{0} is not prime")]
    InvalidPrime(u64),

    #[error("k = {k} is not invertible modulo q = {q}")]
    NonInvertibleK { k: usize, q: u32 },

    #[error("group family mismatch: expected {expected}, found {found}")]
    FamilyMismatch { expected: String, found: String },

    #[error("modulus mismatch: {0}")]
    ModulusMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("result row schema version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    BadField(String),

    #[error("invalid variety: {0}")]
    BadVariety(String),

    #[error("polynomial parse error: {0}")]
    PolyParse(String),

    #[error("non-homogeneous polynomial: saw degrees {0} and {1}")]
    NonHomogeneous(i64, i64),

    #[error("unknown variable x{0} (ring has x0..x{1})")]
    UnknownVariable(usize, usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("monad is not a complex: (beta * alpha)[{row}][{col}] != 0")]
    NotAComplex { row: usize, col: usize },

    #[error("exactness failure at the {end} term: fiber rank {got} < {want} at point {point}")]
    EndsExactness {
        end: &'static str,
        got: usize,
        want: usize,
        point: String,
    },

    #[error("hypercohomology certificate failed at twist {twist}: {which} (monad not exact at ends)")]
    HyperCertificate { twist: i64, which: &'static str },

    #[error("negative cohomology rank: rk(B) - rk(A) - rk(C) = {0}")]
    NegativeRank(i64),

    #[error("window could not be certified within {max_twists} twists: {what}")]
    UncertifiableWindow { max_twists: usize, what: String },

    #[error("window [{lo}, {hi}] too short: {what}")]
    WindowTooShort { lo: i64, hi: i64, what: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal conventions check failed: {0}")]
    Conventions(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

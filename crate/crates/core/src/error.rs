use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a fixed-point-free involution on {size} points: {reason}")]
    NotAnInvolution { size: usize, reason: String },

    #[error("pairing has no through string")]
    NoThroughString,

    #[error("resource cap exceeded: {what} = {value} (limit {limit})")]
    CapExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("deterministic letter index {index} out of range (family has {len} matrices)")]
    LetterOutOfRange { index: usize, len: usize },

    #[error("operator norm {norm} exceeds bound {bound}")]
    NormBound { norm: f64, bound: f64 },

    #[error("missing symbolic table entry for {0}")]
    MissingSymbol(String),

    #[error("unknown Wigner ensemble `{0}`")]
    UnknownWigner(String),

    #[error("degree-0 monomial not allowed here")]
    DegreeZero,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible entry law: {0}")]
    InfeasibleLaw(String),

    #[error("not enough replicates: need {needed}, have {have}")]
    InsufficientReplicates { needed: usize, have: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

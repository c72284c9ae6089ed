use thiserror::Error;

/// Errors raised by the library. The variant name doubles as the
/// machine-readable error code printed by the command-line tool.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NegativeMass: entry {index} has mass {value}")]
    NegativeMass { index: usize, value: f64 },

    #[error("MassNotOne: total mass is {0}")]
    MassNotOne(f64),

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("NullSupport: symbol `{0}` has zero mass")]
    NullSupport(String),

    #[error("AlphabetMismatch: {0}")]
    AlphabetMismatch(String),

    #[error("InvalidAlphabet: {0}")]
    InvalidAlphabet(String),

    #[error("InvalidChannel: row {row} sums to {sum}")]
    InvalidChannel { row: usize, sum: f64 },

    #[error("InvalidOptions: {0}")]
    InvalidOptions(String),

    #[error("NotConverged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("LpFailure: {0}")]
    LpFailure(String),

    #[error("InfeasibleSupport: {0}")]
    InfeasibleSupport(String),

    #[error("TooLarge: {0}")]
    TooLarge(String),

    #[error("AlphabetTooLarge: product alphabet would have {0} symbols")]
    AlphabetTooLarge(usize),

    #[error("ConsistencyViolation: {0}")]
    ConsistencyViolation(String),

    #[error("ParseError: {0}")]
    Parse(String),

    #[error("FileNotFound: {0}")]
    FileNotFound(String),

    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    /// Short stable name of the variant, e.g. `MassNotOne`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeMass { .. } => "NegativeMass",
            Error::MassNotOne(_) => "MassNotOne",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NullSupport(_) => "NullSupport",
            Error::AlphabetMismatch(_) => "AlphabetMismatch",
            Error::InvalidAlphabet(_) => "InvalidAlphabet",
            Error::InvalidChannel { .. } => "InvalidChannel",
            Error::InvalidOptions(_) => "InvalidOptions",
            Error::NotConverged { .. } => "NotConverged",
            Error::LpFailure(_) => "LpFailure",
            Error::InfeasibleSupport(_) => "InfeasibleSupport",
            Error::TooLarge(_) => "TooLarge",
            Error::AlphabetTooLarge(_) => "AlphabetTooLarge",
            Error::ConsistencyViolation(_) => "ConsistencyViolation",
            Error::Parse(_) => "ParseError",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

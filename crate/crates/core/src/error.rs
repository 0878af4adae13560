use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("valuation of zero requested")]
    ZeroInput,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("an odd prime is required, got p = {0}")]
    OddPrimeRequired(u64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("residue characteristic of q = {q} equals p = {p}")]
    ResidueCharacteristicP { q: u64, p: u64 },
    #[error("elements from different precision contexts")]
    ContextMismatch,
    #[error("degree {degree} exceeds the truncation bound {bound}")]
    DegreeOverflow { degree: usize, bound: usize },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("invalid precision context: {0}")]
    InvalidContext(String),
    #[error("dimension {dim} exceeds the configured bound {bound}")]
    DimensionOverflow { dim: usize, bound: usize },
    #[error("relation matrix is {rows}x{cols}, a square presentation is required")]
    NotSquare { rows: usize, cols: usize },
    #[error("group of order {order} exceeds the bound {bound}")]
    GroupTooLarge { order: usize, bound: usize },
    #[error("invalid group table: {0}")]
    InvalidGroup(String),
    #[error("insufficient data: {have} usable points, {need} required")]
    InsufficientData { have: usize, need: usize },
    #[error("fitted coefficient {name} = {value} is not an admissible integer")]
    NonIntegralCoefficient { name: String, value: String },
    #[error("missing invariant: {0}")]
    MissingInvariant(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Variant name, used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroInput => "ZeroInput",
            Error::NotPrime(_) => "NotPrime",
            Error::NotPrimePower(_) => "NotPrimePower",
            Error::OddPrimeRequired(_) => "OddPrimeRequired",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::ResidueCharacteristicP { .. } => "ResidueCharacteristicP",
            Error::ContextMismatch => "ContextMismatch",
            Error::DegreeOverflow { .. } => "DegreeOverflow",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::InvalidContext(_) => "InvalidContext",
            Error::DimensionOverflow { .. } => "DimensionOverflow",
            Error::NotSquare { .. } => "NotSquare",
            Error::GroupTooLarge { .. } => "GroupTooLarge",
            Error::InvalidGroup(_) => "InvalidGroup",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::NonIntegralCoefficient { .. } => "NonIntegralCoefficient",
            Error::MissingInvariant(_) => "MissingInvariant",
            Error::Parse { .. } => "Parse",
            Error::InvalidConfig { .. } => "InvalidConfig",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by tower construction, p-adic arithmetic and the analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("invalid tower: {0}")]
    InvalidTower(String),

    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("division by an element that is zero at the working precision")]
    DivisionByZero,

    #[error("elements belong to different towers or incompatible levels: {0}")]
    LevelMismatch(String),

    #[error("enumeration of {requested} items exceeds the cap of {cap}")]
    CapExceeded { requested: u128, cap: u128 },

    #[error("quotient too coarse: {0}")]
    Unresolved(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPrime(_) => "not_prime",
            Error::InvalidTower(_) => "invalid_tower",
            Error::NotEisenstein(_) => "not_eisenstein",
            Error::PrecisionExhausted(_) => "precision_exhausted",
            Error::DivisionByZero => "division_by_zero",
            Error::LevelMismatch(_) => "level_mismatch",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::Unresolved(_) => "unresolved",
            Error::Precondition(_) => "precondition",
            Error::NoConvergence(_) => "no_convergence",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Falsification outcomes (witnesses) are never errors; they are carried in
/// reports. Errors are reserved for invalid inputs and violated preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dilation factor must be non-negative, got {0}")]
    NegativeDilation(f64),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("horizontal line does not pass through the identity")]
    LineNotThroughIdentity,

    #[error("unknown gallery set `{0}`")]
    UnknownSet(String),

    #[error("missing parameter `{param}` for set `{set}`")]
    MissingParam { set: String, param: String },

    #[error("bad parameter `{param}`: {reason}")]
    BadParam { param: String, reason: String },

    #[error("set `{0}` is not compact")]
    NonCompact(String),

    #[error("identity is not an interior point of `{0}`")]
    IdentityNotInterior(String),

    #[error("assumption b (dilation star-shapedness) fails for `{label}`: {detail}")]
    NotDilationStarShaped { label: String, detail: String },

    #[error("domain `{0}` is too thin to sample")]
    DomainTooThin(String),

    #[error("bracketing for {point:?} exceeded the scale limit {limit}")]
    BracketOverflow { point: [f64; 3], limit: f64 },

    #[error("curve case mismatch: requested {requested}, inputs select {actual}")]
    CaseMismatch {
        requested: &'static str,
        actual: &'static str,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("replay failed: {0}")]
    Replay(String),
}

pub type Result<T> = std::result::Result<T, Error>;

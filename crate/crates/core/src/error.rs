use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(String),

    #[error("dyadic exponent {exp} exceeds the configured limit {limit}")]
    ExponentLimit { exp: u64, limit: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("tuple length mismatch: {sources} sources, {targets} targets")]
    LengthMismatch { sources: usize, targets: usize },

    #[error("tuple is not strictly increasing inside (0, 1): {0}")]
    NotIncreasing(String),

    #[error("basepoint is not contained in the vertex set")]
    BasepointMissing,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("support size {size} exceeds the limit {limit}")]
    SupportLimit { size: usize, limit: usize },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("coupling family exhausted before scale {j} could be scheduled")]
    FamilyExhausted { j: usize },

    #[error("containment violated at scale {j}: {detail}")]
    Containment { j: usize, detail: String },

    #[error("bound violated at scale {j}: {detail}")]
    BoundViolation { j: usize, detail: String },

    #[error("coupling certificate failed: {0}")]
    Certificate(String),

    #[error("distribution escapes the ball at {0}")]
    EscapedBall(String),

    #[error("window {n} too small for hair depth safety")]
    DepthUnsafe { n: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

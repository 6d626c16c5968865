use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid sign value {0}, expected -1 or 1")]
    InvalidSign(i64),

    #[error("value at instance {index} is not in the occupation domain")]
    DomainMismatch { index: usize },

    #[error("occupation domain contains duplicate values")]
    DuplicateDomainValue,

    #[error("instance count must be positive")]
    EmptyInstanceSet,

    #[error("instance count mismatch: expected {expected}, found {found}")]
    InstanceCountMismatch { expected: usize, found: usize },

    #[error("pairing cardinality mismatch: pairing over {pairing} instances, sets of {left} and {right}")]
    PairingCardinality { pairing: usize, left: usize, right: usize },

    #[error("pairing is not a bijection on 0..{0}")]
    NotABijection(usize),

    #[error("branch weights must be non-negative and sum to 1, got sum {0}")]
    InvalidWeights(f64),

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error("count convention mismatch between merged tables")]
    ConventionMismatch,

    #[error("insufficient runs: {found} given, at least {required} required")]
    InsufficientRuns { required: u64, found: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no children at maximum depth")]
    NoChildren,
    #[error("moment order not prepared: requested {requested}, tables built to {built}")]
    MomentOrderNotPrepared { requested: usize, built: usize },
    #[error("cube does not lie in the domain")]
    CubeOutsideDomain,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("oracle limit exceeded")]
    OracleLimitExceeded,
    #[error("threshold below mean")]
    ThresholdBelowMean,
    #[error("ratio too small")]
    RatioTooSmall,
    #[error("non-dyadic atom cube")]
    NonDyadicCube,
    #[error("all test functions have zero norm")]
    ZeroTestNorms,
    #[error("all oscillations vanish on the packing")]
    ZeroOscillation,
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    /// An exhaustive computation would exceed its configured limit.
    #[error("{what}: {required} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        required: BigUint,
        cap: BigUint,
    },

    #[error("strategy `{0}` is randomized and cannot be enumerated; use Monte Carlo instead")]
    Randomized(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn cap(what: &'static str, required: impl Into<BigUint>, cap: impl Into<BigUint>) -> Self {
        Error::CapExceeded {
            what,
            required: required.into(),
            cap: cap.into(),
        }
    }
}

use thiserror::Error;

/// Errors shared by all estimation, generation and diagnostic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("design matrix is rank deficient: smallest singular value {smallest:.3e} <= {tol:.0e} x largest ({largest:.3e})")]
    RankDeficient {
        smallest: f64,
        largest: f64,
        tol: f64,
    },

    #[error("thresholding parameter k = {k} out of range (max {max})")]
    InvalidK { k: usize, max: usize },

    #[error("group size {group_size} does not divide vector length {n}")]
    NotDivisible { n: usize, group_size: usize },

    #[error("series too short: {len} values, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("clip level must be positive, got {0}")]
    InvalidClipLevel(f64),

    #[error("operation requires ground truth, but the instance carries none")]
    MissingTruth,

    #[error("invalid problem size: {0}")]
    InvalidSize(String),

    #[error("invalid corruption plan: {0}")]
    InvalidPlan(String),

    #[error("AR coefficients are not stationary (companion spectral radius >= 1)")]
    NonStationary,

    #[error(
        "subset enumeration too large: {combinations:.3e} supports exceed the {limit:.0e} guard"
    )]
    TooLarge { combinations: f64, limit: f64 },

    #[error("lemma hypothesis violated: ||lambda||_2 = {norm:.3e} > sigma/100 = {bound:.3e}")]
    HypothesisViolated { norm: f64, bound: f64 },

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
}

pub type Result<T> = std::result::Result<T, Error>;

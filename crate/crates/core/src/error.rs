use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid sparse features: {0}")]
    InvalidFeatures(String),

    #[error("invalid probability {value} ({context})")]
    InvalidProbability { value: f64, context: &'static str },

    #[error("invalid id {id} (must be < {bound})")]
    InvalidId { id: usize, bound: usize },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Raised by a learner whose weights became non-finite or exceeded the
/// divergence magnitude. Runs record it rather than crash.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("weights diverged")]
pub struct Diverged;

/// Weight magnitude above which a learner is considered diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e10;

#[inline]
pub(crate) fn check_weight(x: f64) -> std::result::Result<(), Diverged> {
    if x.is_finite() && x.abs() <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(Diverged)
    }
}

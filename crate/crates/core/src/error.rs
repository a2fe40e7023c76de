use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Every hypothesis ended up with zero (or non-finite) weight.
    #[error("degenerate posterior: {0}")]
    Degenerate(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("density is not normalized (total mass {0})")]
    NotNormalized(f64),
    #[error("{what} exceeds the enumeration cap ({size} > {cap})")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("range is zero: bearing and Doppler are undefined at the origin")]
    AtOrigin,
    #[error("particle clouds in one hypothesis have different sizes")]
    CloudSizeMismatch,
}

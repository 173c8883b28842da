use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("output index {index} out of range ({len} outputs)")]
    OutputOutOfRange { index: usize, len: usize },

    #[error("pre-image cap k={k} out of range for n={n}")]
    InvalidCap { k: usize, n: usize },

    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("invalid gain: {0}")]
    Gain(String),

    #[error("eta is not invertible for measure {0}")]
    NonInvertible(String),

    #[error("could not parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    /// A postcondition the construction guarantees did not hold.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for errors caused by bad input rather than a broken invariant.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

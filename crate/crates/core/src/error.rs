use alloc::string::String;

/// Errors raised by the estimate-combination library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate weights: entries sum to zero")]
    DegenerateWeights,
    #[error("{0} terms requested, more than the supported {max}", max = crate::sum::MAX_TERMS)]
    TooManyTerms(usize),
    #[error("support violation: proposal density is zero where f*p is non-zero")]
    SupportViolation,
    #[error("degenerate sample: every importance weight is zero")]
    DegenerateSample,
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;

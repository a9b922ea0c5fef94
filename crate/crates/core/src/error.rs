use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("zero partial quotient at byte {pos}")]
    ZeroDigit { pos: usize },
    #[error("negative partial quotient at byte {pos}")]
    NegativeDigit { pos: usize },
    #[error("invalid continued fraction: {0}")]
    InvalidDigits(String),
    #[error("digit {digit} exceeds declared bound {bound}")]
    DigitExceedsBound { digit: u64, bound: u64 },
    #[error("need {needed} partial quotients, only {available} available")]
    InsufficientDigits { needed: usize, available: usize },
    #[error("discriminant {0} is a perfect square; the number is rational")]
    PerfectSquare(String),
    #[error("value is not in the open interval (0, 1)")]
    OutOfUnitInterval,
    #[error("no period found within {max_digits} partial quotients")]
    PeriodNotFound { max_digits: usize },
    #[error("rational input is not a Brjuno number")]
    RationalInput,
    #[error("operation needs an eventually periodic expansion")]
    NotPeriodic,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cost function `{0}` cannot produce a certified image enclosure")]
    NotEnclosable(String),
    #[error("beta_K enclosure is not separated from 1")]
    BetaNotSeparated,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inconsistent results: {0}")]
    Inconsistent(String),
    #[error("could not reach the requested precision of {bits} bits")]
    PrecisionExhausted { bits: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

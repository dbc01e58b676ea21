use crate::types::Interval;

/// Errors shared across the laboratory modules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Alphabet size outside the supported range `2..=255`.
    #[error("bad alphabet size {a}: must be in 2..=255")]
    BadAlphabet { a: u64 },

    /// Every coefficient of the local rule reduced to 0 mod a.
    #[error("all-zero local rule over Z_{a}")]
    AllZeroRule { a: u32 },

    /// Coefficient list must have odd length 2r+1 with r >= 1.
    #[error("bad coefficient count {len}: expected odd length >= 3")]
    BadCoeffLength { len: usize },

    /// A window does not cover the cells an operation needs.
    #[error("window too small: have {have}, need {need}")]
    WindowTooSmall { have: Interval, need: Interval },

    /// An exhaustive enumeration would exceed the assignment budget.
    #[error("budget exceeded: {needed} assignments needed, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    /// A closed-form evaluation was requested for a sequence or rule that
    /// fails the hypotheses it requires.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// A prime-only code path was handed a composite modulus.
    #[error("{n} is not prime")]
    NotPrime { n: u64 },

    /// A digit stream is shorter than the requested run needs.
    #[error("digit stream too short: have {have}, need {need}")]
    PrefixTooShort { have: usize, need: usize },

    /// A literal (rule, cylinder, sequence, rational) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// An intermediate exact quantity left the representable range.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

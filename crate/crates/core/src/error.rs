use thiserror::Error;

/// Contract violations and run-level failures.
///
/// Content problems in an oracle log are never reported through this type;
/// they degrade to skipped witnesses.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("comparator connects channel {0} to itself")]
    SameChannel(usize),

    #[error("channel {channel} out of range for {n} channels")]
    ChannelOutOfRange { channel: usize, n: usize },

    #[error("{n} channels exceeds the configured capacity of {cap}")]
    Capacity { n: usize, cap: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operation requires a non-empty network")]
    EmptyNetwork,

    #[error("network is not standard on {0} channels")]
    NotStandard(usize),

    #[error("enumeration of {required} networks exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("malformed literal `{input}`: {reason}")]
    Parse { input: String, reason: &'static str },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Crate-wide error type. Variants double as the CLI's exit-code classes,
/// so they are kept coarse and data-carrying.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("budget exceeded: {what} requires {required}, budget is {budget}")]
    BudgetExceeded {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,

    #[error(
        "channel admits no product factorization: cross-ratio fails at \
         z={z}, a={a0}/{a1}, b={b0}/{b1}"
    )]
    CrossRatioViolation {
        z: usize,
        a0: usize,
        a1: usize,
        b0: usize,
        b1: usize,
    },

    #[error("sampler exceeded the round cap of {0} rejection rounds")]
    RoundCapExceeded(u64),

    #[error("unknown builtin game `{0}`")]
    UnknownBuiltin(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::SchemaMismatch(msg.into())
    }
}

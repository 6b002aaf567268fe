use alloc::string::String;

/// Errors raised by the probability, channel and solver layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    #[error("unknown axis label `{0}`")]
    UnknownAxis(String),

    #[error("memory cap exceeded: {needed} entries requested, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    #[error(
        "enumeration budget exceeded: {needed} candidates, budget is {budget} (lower the auxiliary alphabet size)"
    )]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("no feasible distribution satisfies the covertness and cost constraints")]
    Infeasible,

    #[error("invalid channel: {0}")]
    Channel(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("every multicoding candidate assigns the observed state sequence zero probability")]
    EncoderAtypical,
}

pub type Result<T> = core::result::Result<T, Error>;

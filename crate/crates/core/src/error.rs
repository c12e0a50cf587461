use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} attributes, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("rule index {index} out of range for a ruleset of {len} rules")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(
        "domain holds {packets} packets, above the exhaustive budget of {budget}; use sampling instead"
    )]
    DomainTooLarge { packets: u128, budget: u128 },

    #[error("ruleset is not pairwise disjoint: rules {first} and {second} overlap")]
    NotDisjoint { first: usize, second: usize },

    #[error("report: {0}")]
    Report(String),
}

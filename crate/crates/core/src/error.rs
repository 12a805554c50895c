use thiserror::Error;

/// Errors surfaced by the library. Cap violations are distinguished from
/// invalid inputs so that callers (notably the CLI) can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set size {n} exceeds the chain enumeration cap {cap}")]
    ChainCapExceeded { n: usize, cap: usize },

    #[error("witness candidate pool has {size} members, exceeding the cap {cap}")]
    PoolCapExceeded { size: usize, cap: usize },

    #[error("instance size {size} exceeds the cap {cap} for {what}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("{what}: offending member {member}")]
    SidePrecondition { what: String, member: String },

    #[error("marked chain family is not {q}-strong on chain {chain}")]
    NotQStrong { q: usize, chain: u64 },

    #[error("cleaning lost {q}-strength on retained chain {chain} at step {step}")]
    QStrengthLost { q: usize, chain: u64, step: usize },

    #[error("invalid poset: {0}")]
    InvalidPoset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a configured resource cap rather than by
    /// malformed input.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::ChainCapExceeded { .. }
                | Error::PoolCapExceeded { .. }
                | Error::CapExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

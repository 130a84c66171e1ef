use thiserror::Error;

/// Errors raised by the stopflow core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid path power: need n >= 2 and 1 <= k < n, got n={n}, k={k}")]
    InvalidGraph { n: usize, k: usize },

    #[error("position {pos} out of range 1..={n}")]
    PositionOutOfRange { pos: usize, n: usize },

    #[error("no edge from v{from} to v{to}")]
    NotAnEdge { from: usize, to: usize },

    #[error("position {0} has already arrived")]
    DuplicateArrival(usize),

    #[error("arrival sequence is not a permutation of 1..={n}: {reason}")]
    NotAPermutation { n: usize, reason: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("infeasible observer state: {0}")]
    InfeasibleState(String),

    #[error("{what} refused for n={n}: limit is n <= {limit}")]
    ResourceLimit {
        what: &'static str,
        n: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

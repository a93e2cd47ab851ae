//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an API precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An exact computation would exceed its size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A numerical routine failed to meet its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Privacy parameters admit no valid round count.
    ///
    /// Infeasibility is an experiment outcome, not a bug; the CLI maps it to
    /// its own exit code.
    #[error("infeasible parameters: {constraint} (lhs {lhs:.6e} > rhs {rhs:.6e} at T={t})")]
    Infeasible {
        constraint: String,
        lhs: f64,
        rhs: f64,
        t: u64,
    },

    /// The interval-halving decoder hit an inconsistent equilibrium.
    #[error("decode failure for query {query} at level {level}: {reason}")]
    Decode {
        query: usize,
        level: u32,
        reason: String,
    },

    /// The adaptive query mechanism exhausted its hard-query budget.
    #[error("mechanism failure in round {round}: {0}", .reason)]
    MechanismFailure { round: usize, reason: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

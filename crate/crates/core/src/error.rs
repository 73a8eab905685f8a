use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{op} did not converge: {msg}")]
    Convergence { op: &'static str, msg: String },

    #[error("chain not ergodic: absorbing state at 0")]
    NotErgodic,

    #[error("no positive equilibrium (b = {b} <= mu = {mu})")]
    NoPositiveEquilibrium { b: f64, mu: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("event cap of {cap} exceeded before the stopping rule fired")]
    EventCapExceeded { cap: u64 },

    #[error("empty observation window: {0}")]
    EmptyWindow(String),

    #[error("trajectory format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn convergence(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Convergence { op, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

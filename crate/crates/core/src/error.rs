use thiserror::Error;

use crate::expr::Symbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown {kind} `{name}`")]
    Lookup { kind: &'static str, name: String },

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("unbound symbol {0}")]
    Unbound(Symbol),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("power iteration did not converge after {iterations} steps")]
    Convergence { iterations: usize },

    #[error("degenerate kernel `{kernel}`: spectral radius {radius:e} is not positive")]
    DegenerateKernel { kernel: String, radius: f64 },

    #[error("fixed-point iteration diverged at step {iteration} (norm {norm:e})")]
    Divergence { iteration: usize, norm: f64 },

    #[error("problem file: {0}")]
    ProblemFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

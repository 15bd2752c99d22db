use thiserror::Error;

/// Errors produced by the model, solvers and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),

    /// An enumeration or product would exceed its configured guard.
    #[error("{what}: size {size} exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    /// The chain has more than one closed communicating class.
    #[error("reducible chain with {} closed classes: {}", classes.len(), classes.join("; "))]
    ReducibleChain { classes: Vec<String> },

    #[error("no convergence after {iterations} iterations (span {span:e})")]
    NonConvergence { iterations: usize, span: f64 },

    #[error("linear program solver failure: {0}")]
    Solver(String),

    #[error("invalid policy spec `{0}`")]
    InvalidPolicy(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid simulation settings: {0}")]
    InvalidSim(String),
}

impl Error {
    /// True for the enumeration and size guards.
    pub fn is_size_limit(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

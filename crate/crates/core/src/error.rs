use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rule {0} is not one of the eight linear Wolfram rules")]
    UnknownRule(u16),

    #[error("operation requires a hybrid 90/150 rule vector, found rule {0}")]
    UnsupportedRule(u16),

    #[error("register of {n} cells exceeds the supported bound of {max}")]
    Capability { n: usize, max: usize },

    #[error("the all-zero seed is a fixed point and cannot drive an m-sequence")]
    DegenerateSeed,

    #[error("rule vector {0} does not generate a maximal-length sequence")]
    NonMaximal(String),

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("solver diverged at iteration {iteration}; try a smaller step size")]
    SolverDivergence { iteration: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no observations for channel {0}")]
    MissingChannel(char),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

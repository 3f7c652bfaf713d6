//! Process exit codes.

use std::fmt;
use std::io;

use monoseal::Error;

pub const OK: u8 = 0;
pub const OTHER: u8 = 1;
pub const CONFIG: u8 = 2;
pub const KEY: u8 = 3;
pub const DIVERGENCE: u8 = 4;
pub const IO: u8 = 5;

/// Input rejected by the CLI before or while running a command.
#[derive(Debug)]
pub enum Rejection {
    Config(String),
    Key(String),
}

impl Rejection {
    pub fn config(e: impl fmt::Display) -> Self {
        Rejection::Config(e.to_string())
    }

    pub fn key(e: impl fmt::Display) -> Self {
        Rejection::Key(e.to_string())
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Config(m) => write!(f, "configuration error: {m}"),
            Rejection::Key(m) => write!(f, "key rejected: {m}"),
        }
    }
}

impl std::error::Error for Rejection {}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownStrategy { .. } | Error::Parse(_) => CONFIG,
        Error::UnknownRule(_)
        | Error::UnsupportedRule(_)
        | Error::Capability { .. }
        | Error::DegenerateSeed
        | Error::NonMaximal(_) => KEY,
        Error::Divergence { .. } | Error::SolverDivergence { .. } => DIVERGENCE,
        Error::Io(_) => IO,
        _ => OTHER,
    }
}

/// The first cause in the chain that maps to a known class decides the code.
pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(r) = cause.downcast_ref::<Rejection>() {
            return match r {
                Rejection::Config(_) => CONFIG,
                Rejection::Key(_) => KEY,
            };
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return IO;
        }
    }
    OTHER
}

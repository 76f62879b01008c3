use thiserror::Error;

use crate::bitseq::BitString;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("edge source {source_vertex} already has an outgoing edge in network {network}")]
    DuplicationConflict { network: usize, source_vertex: BitString },
    #[error("flow {flow} on edge from {source_vertex} exceeds its delay {delay} in network {network}")]
    OutflowViolation {
        network: usize,
        source_vertex: BitString,
        flow: String,
        delay: String,
    },
    #[error("conflicting delay assignment in network {network} at level {level}: {detail}")]
    DelayConflict {
        network: usize,
        level: usize,
        detail: String,
    },
    #[error("work budget of {budget} exhausted at level {level}")]
    BudgetExhausted { budget: u64, level: usize },
    #[error("construction invariant broken: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for a construction violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Domain(_)
            | Error::Config(_)
            | Error::UnknownName { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::DuplicationConflict { .. }
            | Error::OutflowViolation { .. }
            | Error::DelayConflict { .. }
            | Error::BudgetExhausted { .. }
            | Error::Invariant(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

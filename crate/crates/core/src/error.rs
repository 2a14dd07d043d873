use thiserror::Error;

use crate::circuit::LocationKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("{kind} on non-adjacent positions {p} and {q}")]
    NotAdjacent {
        kind: LocationKind,
        p: usize,
        q: usize,
    },
    #[error("{0} needs two positions")]
    MissingTarget(LocationKind),
}

/// First invariant broken by a circuit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("slice {slice}, location {id}: {reason}")]
pub struct Violation {
    pub slice: usize,
    pub id: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("invalid circuit: {0}")]
    Invalid(#[from] Violation),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("appended circuit of width {inner} at offset {offset} overflows width {outer}")]
    Overflow {
        inner: usize,
        offset: usize,
        outer: usize,
    },
    #[error("block layouts overlap at position {0}")]
    Overlap(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("odd syndrome with every candidate bin empty")]
    Inconsistent,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("level must be at least 1, got {0}")]
    Level(usize),
    #[error("cannot place {errors} errors in {locations} locations")]
    TooManyErrors { errors: u64, locations: u64 },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("trial count must be positive")]
    NoTrials,
    #[error("fault index {index} outside 0..{locations}")]
    FaultIndex { index: u64, locations: u64 },
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("level {level}: missing r_i row for i = {i}")]
    MissingRow { level: usize, i: usize },
    #[error("invalid row: {0}")]
    InvalidRow(String),
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

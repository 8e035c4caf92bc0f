use thiserror::Error;

use crate::network::{CapacityVerdict, TraceEntry};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("{what} = {count} exceeds the enumeration budget of {budget}")]
    Budget { what: String, count: u128, budget: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("coefficient stream exhausted at degree {max_degree}: reached {reached} of target {target}")]
    Insufficient { target: u128, reached: u128, max_degree: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("capacity check refused: {}", .0.summary())]
    Refused(Box<CapacityVerdict>),
    #[error("no convergence after {restarts} restarts: {reason}")]
    Convergence { restarts: usize, reason: String, trace: Vec<TraceEntry> },
    #[error("parse error: {0}")]
    Parse(String),
}

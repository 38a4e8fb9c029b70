use thiserror::Error;

use crate::model::{JobId, ProcId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("schedule references unknown job {0}")]
    UnknownJob(JobId),

    #[error("schedule references unknown processor {0}")]
    UnknownProcessor(ProcId),

    #[error("operation requires a {expected}-mode instance")]
    UnsupportedMode { expected: &'static str },

    #[error("job {0} has no configuration on any processor")]
    NoConfiguration(JobId),

    #[error("configuration LP is infeasible at this granularity; try a smaller epsilon or a larger slot cap")]
    Infeasible,

    #[error("LP solver stopped: {0}")]
    Solver(String),

    #[error("preemptive schedule violates the configuration property for job {0}")]
    NotRestrictable(JobId),

    #[error("oracle refused: {0}")]
    OracleLimit(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

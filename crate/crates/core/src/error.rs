use thiserror::Error;

use crate::logic::ParseError;
use crate::system::ModelError;

/// Errors raised while building models, enumerating runs, or evaluating formulas.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("formula syntax: {0}")]
    Parse(#[from] ParseError),

    #[error("model validation: {0}")]
    Model(#[from] ModelError),

    #[error("unknown agent '{0}'")]
    UnknownAgent(String),

    #[error("proposition '{0}' is not mapped by the interpretation")]
    UnmappedProposition(String),

    #[error("bounded knowledge operator Khat cannot be evaluated without an epistemic setup")]
    BoundedKnowledgeWithoutSetup,

    #[error("'{0}' must not contain epistemic operators")]
    NotPropositional(String),

    #[error("model has no human agent")]
    NoHumanAgent,

    #[error("epistemic setup does not cover human local state {0}")]
    SetupCoverage(String),

    #[error("point (run {run}, time {time}) is outside the run set")]
    PointOutOfBounds { run: usize, time: usize },

    #[error("state space limit exceeded: more than {limit} points")]
    ResourceLimit { limit: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

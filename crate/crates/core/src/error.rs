use thiserror::Error;

use crate::ids::{AgentId, StructureId, TaskId};

/// Problems with a scenario: malformed text or inconsistent content.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown task `{0}`")]
    UnknownTask(TaskId),

    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),

    #[error("unknown coalition structure `{0}`")]
    UnknownStructure(StructureId),

    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScenarioError {
    pub fn is_parse(&self) -> bool {
        matches!(self, ScenarioError::Parse { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreferenceError {
    /// The agent has not ranked this structure yet; it must evaluate it first.
    #[error("agent `{agent}` has no rank for structure `{structure}`")]
    Unranked { agent: AgentId, structure: StructureId },
}

/// A support cannot be turned into a coalition structure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no admissible coalition can perform {combination}")]
pub struct Infeasible {
    pub combination: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid generator parameters: {0}")]
    Generator(String),

    #[error("invalid experiment configuration: {0}")]
    Experiment(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("group contains structure `{0}` that is not signed by every agent")]
    Unsigned(StructureId),

    #[error("group is empty")]
    EmptyGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("structure space of {size} exceeds the oracle limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

//! Coalition formation by task grouping, plus a deterministic simulator of
//! a concession-based negotiation over coalition structures.

pub mod combination;
pub mod error;
pub mod harness;
pub mod ids;
pub mod negotiation;
pub mod preference;
pub mod scenario;
pub mod task;

pub use combination::{Partition, Support, TaskCombination};
pub use error::{ConfigError, Infeasible, OracleError, PreferenceError, ProtocolError, ScenarioError};
pub use ids::{AgentId, StructureId, TaskId};
pub use preference::{CoalitionStructure, Group, OrdinalPreference, Ranking, Signature, StructureRegistry};
pub use scenario::Scenario;
pub use task::{Task, TaskRelationship};

//! Tasks, capabilities and the pairwise task relationships.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ScenarioError;
use crate::ids::{AgentId, TaskId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    pub label: Option<String>,
    /// Opaque tag naming what the task computes. Two tasks with the same
    /// indicator compute the same thing by different methods.
    pub indicator: Option<String>,
}

impl Task {
    pub fn new(id: impl Into<TaskId>) -> Self {
        Task { id: id.into(), label: None, indicator: None }
    }

    pub fn with_indicator(mut self, indicator: impl Into<String>) -> Self {
        self.indicator = Some(indicator.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    TotalCovering,
    InclusiveCovering,
    PartialCovering,
    TotalComplementary,
    Dependent,
    Competitive,
}

impl RelationKind {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, RelationKind::Dependent | RelationKind::InclusiveCovering)
    }

    /// Kinds whose edges let two tasks be grouped into one combination.
    pub fn links_tasks(self) -> bool {
        matches!(
            self,
            RelationKind::TotalCovering | RelationKind::TotalComplementary | RelationKind::Dependent
        )
    }

    pub fn keyword(self) -> &'static str {
        match self {
            RelationKind::TotalCovering => "covering",
            RelationKind::InclusiveCovering => "inclusive",
            RelationKind::PartialCovering => "partial",
            RelationKind::TotalComplementary => "complementary",
            RelationKind::Dependent => "dependent",
            RelationKind::Competitive => "competitive",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "covering" => RelationKind::TotalCovering,
            "inclusive" => RelationKind::InclusiveCovering,
            "partial" => RelationKind::PartialCovering,
            "complementary" => RelationKind::TotalComplementary,
            "dependent" => RelationKind::Dependent,
            "competitive" => RelationKind::Competitive,
            _ => return None,
        })
    }
}

/// A declared relation between two distinct tasks.
///
/// Symmetric kinds are stored with `a < b`. For `Dependent`, `a` is the task
/// that needs the results of `b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskRelationship {
    pub kind: RelationKind,
    pub a: TaskId,
    pub b: TaskId,
}

impl TaskRelationship {
    pub fn new(kind: RelationKind, a: TaskId, b: TaskId) -> Result<Self, ScenarioError> {
        if a == b {
            return Err(ScenarioError::Invalid(format!("{} relationship of `{a}` with itself", kind.keyword())));
        }
        let (a, b) = if kind.is_symmetric() && b < a { (b, a) } else { (a, b) };
        Ok(TaskRelationship { kind, a, b })
    }

    /// `needer` needs the results of `provider`.
    pub fn dependent(needer: TaskId, provider: TaskId) -> Result<Self, ScenarioError> {
        Self::new(RelationKind::Dependent, needer, provider)
    }

    pub fn touches(&self, x: &TaskId, y: &TaskId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }
}

impl fmt::Display for TaskRelationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RelationKind::Dependent => write!(f, "dependent {} -> {}", self.a, self.b),
            kind => write!(f, "{} {} {}", kind.keyword(), self.a, self.b),
        }
    }
}

/// Which agents can carry out which tasks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CapabilityMap {
    by_agent: BTreeMap<AgentId, BTreeSet<TaskId>>,
}

impl CapabilityMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(&mut self, agent: AgentId, task: TaskId) {
        self.by_agent.entry(agent).or_default().insert(task);
    }

    pub fn set(&mut self, agent: AgentId, tasks: impl IntoIterator<Item = TaskId>) {
        self.by_agent.insert(agent, tasks.into_iter().collect());
    }

    pub fn tasks_of(&self, agent: &AgentId) -> impl Iterator<Item = &TaskId> {
        self.by_agent.get(agent).into_iter().flatten()
    }

    pub fn can(&self, agent: &AgentId, task: &TaskId) -> bool {
        self.by_agent.get(agent).is_some_and(|ts| ts.contains(task))
    }

    /// Agents able to carry out `task`.
    pub fn capable_agents(&self, task: &TaskId) -> BTreeSet<AgentId> {
        self.by_agent
            .iter()
            .filter(|(_, ts)| ts.contains(task))
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn agents(&self) -> impl Iterator<Item = (&AgentId, &BTreeSet<TaskId>)> {
        self.by_agent.iter()
    }
}

/// Result of comparing the capable-agent sets of two tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Covering {
    Total,
    /// One capable set contains the other; `wider` is the task whose
    /// capable set is the larger one (or either, for equal conflicting sets).
    Inclusive { wider: TaskId },
    Partial,
    None,
}

/// Unordered task pair, stored with the smaller id first.
pub fn task_pair(a: &TaskId, b: &TaskId) -> (TaskId, TaskId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// The task-level facts that the classifiers need.
pub trait TaskSpace {
    fn task(&self, id: &TaskId) -> Option<&Task>;
    fn capabilities(&self) -> &CapabilityMap;
    fn conflicts(&self) -> &BTreeSet<(TaskId, TaskId)>;
    fn relationships(&self) -> &[TaskRelationship];
}

pub fn covering_relation(space: &impl TaskSpace, a: &TaskId, b: &TaskId) -> Result<Covering, ScenarioError> {
    for t in [a, b] {
        if space.task(t).is_none() {
            return Err(ScenarioError::UnknownTask(t.clone()));
        }
    }
    if a == b {
        return Err(ScenarioError::Invalid(format!("covering relation of `{a}` with itself")));
    }
    let caps = space.capabilities();
    let ca = caps.capable_agents(a);
    let cb = caps.capable_agents(b);
    if ca.is_disjoint(&cb) {
        return Ok(Covering::None);
    }
    if ca == cb {
        if space.conflicts().contains(&task_pair(a, b)) {
            return Ok(Covering::Inclusive { wider: a.clone() });
        }
        return Ok(Covering::Total);
    }
    if ca.is_superset(&cb) {
        Ok(Covering::Inclusive { wider: a.clone() })
    } else if cb.is_superset(&ca) {
        Ok(Covering::Inclusive { wider: b.clone() })
    } else {
        Ok(Covering::Partial)
    }
}

pub fn are_competitive(space: &impl TaskSpace, a: &TaskId, b: &TaskId) -> bool {
    if a == b {
        return false;
    }
    if let (Some(ta), Some(tb)) = (space.task(a), space.task(b)) {
        if ta.indicator.is_some() && ta.indicator == tb.indicator {
            return true;
        }
    }
    space
        .relationships()
        .iter()
        .any(|r| r.kind == RelationKind::Competitive && r.touches(a, b))
}

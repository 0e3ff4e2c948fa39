//! Scenario data model and its sectioned plain-text file format.
//!
//! ```text
//! # comments start with '#'
//! [context]
//! date = 2004-06-01
//! [tasks]
//! T1 label="home page" indicator=freq:our
//! T2
//! [agents]
//! C1 C2
//! [capabilities]
//! C1: T1 T2
//! C2: T2
//! [relationships]
//! complementary T1 T2
//! dependent T2 -> T1
//! [conflicts]
//! T1 T2
//! [structures]
//! E0:
//! E1: C1=T1 ; C1+C2=T2
//! [preferences]
//! reference: E0
//! C1 priority: T1 > T2
//! C1 combinations: T1+T2
//! C1 ranks: E1 > E0
//! C1 agents: C2 C1
//! C2 hashed: salt=7 levels=5
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::combination::TaskCombination;
use crate::error::ScenarioError;
use crate::ids::{AgentId, StructureId, TaskId};
use crate::preference::{Coalition, Ranking};
use crate::task::{are_competitive, task_pair, CapabilityMap, RelationKind, Task, TaskRelationship, TaskSpace};

/// Frozen negotiation parameters (e.g. date/time). Must not change while a
/// negotiation step is running.
pub type Context = BTreeMap<String, String>;

pub const DEFAULT_REFERENCE: &str = "E0";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclaredStructure {
    pub id: StructureId,
    pub coalitions: Vec<Coalition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentPreferences {
    /// Task priority tiers, most wanted first. Tasks in one tier are
    /// interchangeable. Tasks the agent never lists have no demand.
    pub priority: Vec<Vec<TaskId>>,
    /// Explicit combination preference, best first. When present, only
    /// these multi-task combinations are considered by the agent.
    pub combinations: Option<Vec<Vec<TaskId>>>,
    pub ranking: Ranking,
    /// Preferred partners, best first, used when choosing coalition members.
    pub agent_ranking: Vec<AgentId>,
}

impl Default for AgentPreferences {
    fn default() -> Self {
        AgentPreferences {
            priority: Vec::new(),
            combinations: None,
            ranking: Ranking::Hashed { salt: 0, levels: 5 },
            agent_ranking: Vec::new(),
        }
    }
}

impl AgentPreferences {
    /// Tier index of `task` (0 = most wanted), if listed.
    pub fn tier_of(&self, task: &TaskId) -> Option<usize> {
        self.priority.iter().position(|tier| tier.contains(task))
    }

    pub fn listed_tasks(&self) -> impl Iterator<Item = &TaskId> {
        self.priority.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub context: Context,
    pub tasks: Vec<Task>,
    pub agents: Vec<AgentId>,
    pub capabilities: CapabilityMap,
    pub relationships: Vec<TaskRelationship>,
    pub conflicts: BTreeSet<(TaskId, TaskId)>,
    /// Explicitly declared coalition structures. When non-empty these form
    /// the whole structure space of a negotiation.
    pub structures: Vec<DeclaredStructure>,
    pub reference: StructureId,
    pub preferences: BTreeMap<AgentId, AgentPreferences>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            context: Context::new(),
            tasks: Vec::new(),
            agents: Vec::new(),
            capabilities: CapabilityMap::new(),
            relationships: Vec::new(),
            conflicts: BTreeSet::new(),
            structures: Vec::new(),
            reference: StructureId::from(DEFAULT_REFERENCE),
            preferences: BTreeMap::new(),
        }
    }
}

impl TaskSpace for Scenario {
    fn task(&self, id: &TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| &t.id == id)
    }

    fn capabilities(&self) -> &CapabilityMap {
        &self.capabilities
    }

    fn conflicts(&self) -> &BTreeSet<(TaskId, TaskId)> {
        &self.conflicts
    }

    fn relationships(&self) -> &[TaskRelationship] {
        &self.relationships
    }
}

impl Scenario {
    pub fn has_task(&self, id: &TaskId) -> bool {
        self.task(id).is_some()
    }

    pub fn has_agent(&self, id: &AgentId) -> bool {
        self.agents.contains(id)
    }

    pub fn preferences_of(&self, agent: &AgentId) -> AgentPreferences {
        self.preferences.get(agent).cloned().unwrap_or_default()
    }

    pub fn declared(&self, id: &StructureId) -> Option<&DeclaredStructure> {
        self.structures.iter().find(|s| &s.id == id)
    }

    /// Tasks some agent can carry out, in id order.
    pub fn executable_tasks(&self) -> Vec<TaskId> {
        let mut ts: Vec<TaskId> = self
            .tasks
            .iter()
            .map(|t| t.id.clone())
            .filter(|t| !self.capabilities.capable_agents(t).is_empty())
            .collect();
        ts.sort();
        ts
    }

    /// Number of relationship edges, declared or derived from capabilities
    /// (total covering), among distinct task pairs.
    pub fn relationship_edge_count(&self) -> usize {
        let mut pairs: BTreeSet<(TaskId, TaskId)> =
            self.relationships.iter().map(|r| task_pair(&r.a, &r.b)).collect();
        let ids: Vec<&TaskId> = self.tasks.iter().map(|t| &t.id).collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if matches!(crate::task::covering_relation(self, a, b), Ok(crate::task::Covering::Total)) {
                    pairs.insert(task_pair(a, b));
                }
            }
        }
        pairs.len()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.tasks.is_empty() {
            return Err(ScenarioError::Invalid("scenario declares no tasks".into()));
        }
        if self.agents.is_empty() {
            return Err(ScenarioError::Invalid("scenario declares no agents".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(&t.id) {
                return Err(ScenarioError::Invalid(format!("duplicate task `{}`", t.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for a in &self.agents {
            if !seen.insert(a) {
                return Err(ScenarioError::Invalid(format!("duplicate agent `{a}`")));
            }
        }
        for (agent, tasks) in self.capabilities.agents() {
            self.check_agent(agent)?;
            for t in tasks {
                self.check_task(t)?;
            }
        }
        for r in &self.relationships {
            self.check_task(&r.a)?;
            self.check_task(&r.b)?;
        }
        for (a, b) in &self.conflicts {
            self.check_task(a)?;
            self.check_task(b)?;
        }

        let mut ids = BTreeSet::new();
        for s in &self.structures {
            if !ids.insert(&s.id) {
                return Err(ScenarioError::Invalid(format!("duplicate structure `{}`", s.id)));
            }
            let mut covered = BTreeSet::new();
            for c in &s.coalitions {
                if c.members.is_empty() {
                    return Err(ScenarioError::Invalid(format!("structure `{}` has an empty coalition", s.id)));
                }
                for t in &c.assignment.tasks {
                    self.check_task(t)?;
                    if !covered.insert(t) {
                        return Err(ScenarioError::Invalid(format!(
                            "structure `{}` assigns task `{t}` twice",
                            s.id
                        )));
                    }
                }
                for m in &c.members {
                    self.check_agent(m)?;
                    if !c.assignment.tasks.iter().any(|t| self.capabilities.can(m, t)) {
                        return Err(ScenarioError::Invalid(format!(
                            "structure `{}`: agent `{m}` cannot carry out any of {}",
                            s.id, c.assignment
                        )));
                    }
                }
            }
        }
        if !self.structures.is_empty() && self.declared(&self.reference).is_none() {
            return Err(ScenarioError::UnknownStructure(self.reference.clone()));
        }

        for (agent, prefs) in &self.preferences {
            self.check_agent(agent)?;
            for t in prefs.listed_tasks() {
                self.check_task(t)?;
            }
            for a in &prefs.agent_ranking {
                self.check_agent(a)?;
            }
            for combo in prefs.combinations.iter().flatten() {
                for t in combo {
                    self.check_task(t)?;
                }
                for (i, a) in combo.iter().enumerate() {
                    for b in &combo[i + 1..] {
                        if are_competitive(self, a, b) {
                            return Err(ScenarioError::Invalid(format!(
                                "agent `{agent}` prefers a combination holding competitive tasks `{a}` and `{b}`"
                            )));
                        }
                    }
                }
            }
            match &prefs.ranking {
                Ranking::Table(table) => {
                    if self.structures.is_empty() {
                        return Err(ScenarioError::Invalid(format!(
                            "agent `{agent}` ranks structures but none are declared"
                        )));
                    }
                    for id in table.keys() {
                        if self.declared(id).is_none() {
                            return Err(ScenarioError::UnknownStructure(id.clone()));
                        }
                    }
                    for s in &self.structures {
                        if !table.contains_key(&s.id) {
                            return Err(ScenarioError::Invalid(format!(
                                "agent `{agent}` does not rank structure `{}`",
                                s.id
                            )));
                        }
                    }
                }
                Ranking::Hashed { levels, .. } => {
                    if *levels == 0 {
                        return Err(ScenarioError::Invalid(format!("agent `{agent}` has zero preference levels")));
                    }
                }
            }
        }
        if !self.structures.is_empty() {
            for a in &self.agents {
                if !matches!(self.preferences.get(a).map(|p| &p.ranking), Some(Ranking::Table(_))) {
                    return Err(ScenarioError::Invalid(format!(
                        "agent `{a}` needs a ranking over the declared structures"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_task(&self, t: &TaskId) -> Result<(), ScenarioError> {
        if self.has_task(t) {
            Ok(())
        } else {
            Err(ScenarioError::UnknownTask(t.clone()))
        }
    }

    fn check_agent(&self, a: &AgentId) -> Result<(), ScenarioError> {
        if self.has_agent(a) {
            Ok(())
        } else {
            Err(ScenarioError::UnknownAgent(a.clone()))
        }
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        Parser::default().run(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.context.is_empty() {
            out.push_str("[context]\n");
            for (k, v) in &self.context {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out.push_str("[tasks]\n");
        for t in &self.tasks {
            out.push_str(t.id.as_str());
            if let Some(label) = &t.label {
                let _ = write!(out, " label=\"{}\"", label.replace('"', "'"));
            }
            if let Some(ind) = &t.indicator {
                let _ = write!(out, " indicator={ind}");
            }
            out.push('\n');
        }
        out.push_str("[agents]\n");
        out.push_str(&join(self.agents.iter(), " "));
        out.push('\n');
        out.push_str("[capabilities]\n");
        for (agent, tasks) in self.capabilities.agents() {
            let _ = writeln!(out, "{agent}: {}", join(tasks.iter(), " "));
        }
        if !self.relationships.is_empty() {
            out.push_str("[relationships]\n");
            for r in &self.relationships {
                let _ = writeln!(out, "{r}");
            }
        }
        if !self.conflicts.is_empty() {
            out.push_str("[conflicts]\n");
            for (a, b) in &self.conflicts {
                let _ = writeln!(out, "{a} {b}");
            }
        }
        if !self.structures.is_empty() {
            out.push_str("[structures]\n");
            for s in &self.structures {
                let parts: Vec<String> = s
                    .coalitions
                    .iter()
                    .map(|c| format!("{}={}", join(c.members.iter(), "+"), join(c.assignment.tasks.iter(), ",")))
                    .collect();
                let _ = writeln!(out, "{}: {}", s.id, parts.join(" ; ")).map(|_| ());
            }
        }
        out.push_str("[preferences]\n");
        let _ = writeln!(out, "reference: {}", self.reference);
        for (agent, p) in &self.preferences {
            if !p.priority.is_empty() {
                let tiers: Vec<String> = p.priority.iter().map(|t| join(t.iter(), " ")).collect();
                let _ = writeln!(out, "{agent} priority: {}", tiers.join(" > "));
            }
            if let Some(combos) = &p.combinations {
                let cs: Vec<String> = combos.iter().map(|c| join(c.iter(), "+")).collect();
                let _ = writeln!(out, "{agent} combinations: {}", cs.join(", "));
            }
            match &p.ranking {
                Ranking::Table(table) => {
                    let mut tiers: BTreeMap<u32, Vec<&StructureId>> = BTreeMap::new();
                    for (id, r) in table {
                        tiers.entry(*r).or_default().push(id);
                    }
                    let ts: Vec<String> = tiers.values().map(|ids| join(ids.iter(), " ")).collect();
                    let _ = writeln!(out, "{agent} ranks: {}", ts.join(" > "));
                }
                Ranking::Hashed { salt, levels } => {
                    let _ = writeln!(out, "{agent} hashed: salt={salt} levels={levels}");
                }
            }
            if !p.agent_ranking.is_empty() {
                let _ = writeln!(out, "{agent} agents: {}", join(p.agent_ranking.iter(), " "));
            }
        }
        out
    }
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>, sep: &str) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

#[derive(Default)]
struct Parser {
    scenario: Scenario,
    reference_set: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Context,
    Tasks,
    Agents,
    Capabilities,
    Relationships,
    Conflicts,
    Structures,
    Preferences,
}

fn perr(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, message: message.into() }
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Scenario, ScenarioError> {
        let mut section = None;
        for (idx, raw) in text.lines().enumerate() {
            let n = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "context" => Section::Context,
                    "tasks" => Section::Tasks,
                    "agents" => Section::Agents,
                    "capabilities" => Section::Capabilities,
                    "relationships" => Section::Relationships,
                    "conflicts" => Section::Conflicts,
                    "structures" => Section::Structures,
                    "preferences" => Section::Preferences,
                    other => return Err(perr(n, format!("unknown section [{other}]"))),
                });
                continue;
            }
            match section {
                None => return Err(perr(n, "content before the first [section]")),
                Some(Section::Context) => self.context(n, line)?,
                Some(Section::Tasks) => self.task(n, line)?,
                Some(Section::Agents) => {
                    self.scenario.agents.extend(line.split_whitespace().map(AgentId::from));
                }
                Some(Section::Capabilities) => self.capability(n, line)?,
                Some(Section::Relationships) => self.relationship(n, line)?,
                Some(Section::Conflicts) => self.conflict(n, line)?,
                Some(Section::Structures) => self.structure(n, line)?,
                Some(Section::Preferences) => self.preference(n, line)?,
            }
        }
        let _ = self.reference_set;
        Ok(self.scenario)
    }

    fn context(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (k, v) = line.split_once('=').ok_or_else(|| perr(n, "expected `key = value`"))?;
        self.scenario.context.insert(k.trim().to_owned(), v.trim().to_owned());
        Ok(())
    }

    fn task(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let tokens = tokenize(line).map_err(|m| perr(n, m))?;
        let mut it = tokens.into_iter();
        let id = it.next().ok_or_else(|| perr(n, "missing task id"))?;
        if id.contains('=') {
            return Err(perr(n, "task line must start with the task id"));
        }
        let mut task = Task::new(TaskId::new(id));
        for tok in it {
            let (k, v) = tok.split_once('=').ok_or_else(|| perr(n, format!("expected key=value, got `{tok}`")))?;
            match k {
                "label" => task.label = Some(v.to_owned()),
                "indicator" => task.indicator = Some(v.to_owned()),
                other => return Err(perr(n, format!("unknown task attribute `{other}`"))),
            }
        }
        self.scenario.tasks.push(task);
        Ok(())
    }

    fn capability(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (agent, tasks) = line.split_once(':').ok_or_else(|| perr(n, "expected `AGENT: TASK ...`"))?;
        let agent = AgentId::new(agent.trim());
        let tasks: Vec<TaskId> = tasks.split_whitespace().map(TaskId::from).collect();
        let existing: Vec<TaskId> = self.scenario.capabilities.tasks_of(&agent).cloned().collect();
        self.scenario.capabilities.set(agent, existing.into_iter().chain(tasks));
        Ok(())
    }

    fn relationship(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let kind = words
            .first()
            .and_then(|w| RelationKind::from_keyword(w))
            .ok_or_else(|| perr(n, format!("unknown relationship `{}`", words.first().unwrap_or(&""))))?;
        let (a, b) = match (kind, words.as_slice()) {
            (RelationKind::Dependent, [_, a, "->", b]) => (*a, *b),
            (RelationKind::Dependent, _) => return Err(perr(n, "expected `dependent NEEDER -> PROVIDER`")),
            (_, [_, a, b]) => (*a, *b),
            _ => return Err(perr(n, "expected `KIND TASK TASK`")),
        };
        let rel = TaskRelationship::new(kind, TaskId::from(a), TaskId::from(b)).map_err(|e| perr(n, e.to_string()))?;
        self.scenario.relationships.push(rel);
        Ok(())
    }

    fn conflict(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            [a, b] if a != b => {
                self.scenario.conflicts.insert(task_pair(&TaskId::from(*a), &TaskId::from(*b)));
                Ok(())
            }
            _ => Err(perr(n, "expected two distinct task ids")),
        }
    }

    fn structure(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (id, body) = line.split_once(':').ok_or_else(|| perr(n, "expected `ID: MEMBERS=TASKS ; ...`"))?;
        let mut coalitions = Vec::new();
        for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (members, tasks) =
                part.split_once('=').ok_or_else(|| perr(n, format!("expected MEMBERS=TASKS, got `{part}`")))?;
            let members: BTreeSet<AgentId> =
                members.split('+').map(str::trim).filter(|m| !m.is_empty()).map(AgentId::from).collect();
            let tasks: Vec<TaskId> =
                tasks.split(',').map(str::trim).filter(|t| !t.is_empty()).map(TaskId::from).collect();
            if members.is_empty() || tasks.is_empty() {
                return Err(perr(n, format!("empty coalition in `{part}`")));
            }
            coalitions.push(Coalition { members, assignment: TaskCombination::unscored(tasks) });
        }
        self.scenario.structures.push(DeclaredStructure { id: StructureId::new(id.trim()), coalitions });
        Ok(())
    }

    fn preference(&mut self, n: usize, line: &str) -> Result<(), ScenarioError> {
        let (head, body) = line.split_once(':').ok_or_else(|| perr(n, "expected `AGENT KIND: ...`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head == ["reference"] {
            self.scenario.reference = StructureId::new(body.trim());
            self.reference_set = true;
            return Ok(());
        }
        let [agent, kind] = head.as_slice() else {
            return Err(perr(n, "expected `AGENT KIND: ...`"));
        };
        let agent = AgentId::from(*agent);
        let prefs = self.scenario.preferences.entry(agent).or_default();
        match *kind {
            "priority" => {
                prefs.priority = body
                    .split('>')
                    .map(|tier| tier.split_whitespace().map(TaskId::from).collect::<Vec<_>>())
                    .filter(|tier| !tier.is_empty())
                    .collect();
            }
            "combinations" => {
                let combos = body
                    .split(',')
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(|c| c.split('+').map(str::trim).map(TaskId::from).collect::<Vec<_>>())
                    .collect();
                prefs.combinations = Some(combos);
            }
            "ranks" => {
                let mut table = BTreeMap::new();
                for (rank, tier) in body.split('>').enumerate() {
                    for id in tier.split_whitespace() {
                        if table.insert(StructureId::from(id), rank as u32).is_some() {
                            return Err(perr(n, format!("structure `{id}` ranked twice")));
                        }
                    }
                }
                prefs.ranking = Ranking::Table(table);
            }
            "hashed" => {
                let mut salt = None;
                let mut levels = None;
                for tok in body.split_whitespace() {
                    match tok.split_once('=') {
                        Some(("salt", v)) => salt = Some(v.parse().map_err(|_| perr(n, "bad salt"))?),
                        Some(("levels", v)) => levels = Some(v.parse().map_err(|_| perr(n, "bad levels"))?),
                        _ => return Err(perr(n, format!("unexpected `{tok}`"))),
                    }
                }
                prefs.ranking = Ranking::Hashed {
                    salt: salt.ok_or_else(|| perr(n, "missing salt"))?,
                    levels: levels.unwrap_or(5),
                };
            }
            "agents" => prefs.agent_ranking = body.split_whitespace().map(AgentId::from).collect(),
            other => return Err(perr(n, format!("unknown preference kind `{other}`"))),
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Whitespace tokenizer that keeps `key="quoted value"` together.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match ch {
            '"' => in_quotes = !in_quotes,
            c if c.is_whitespace() && !in_quotes => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    Ok(tokens)
}

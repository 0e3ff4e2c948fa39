//! Coalition structures, ordinal preferences over them, groups, signatures
//! and the per-agent planning pipeline that turns supports into structures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::combination::{
    build_partitions, complete_support, generate_combinations, task_pool, CombinationTree, GenerateOptions,
    Partition, Support, TaskCombination, TreeOptions,
};
use crate::error::{Infeasible, PreferenceError};
use crate::ids::{AgentId, StructureId, TaskId};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalition {
    pub members: BTreeSet<AgentId>,
    pub assignment: TaskCombination,
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<&str> = self.members.iter().map(AgentId::as_str).collect();
        write!(f, "{{{}}}:{}", m.join(","), self.assignment)
    }
}

/// Canonical identity of a structure: who does which tasks. Coalitions
/// with the same member set are merged.
pub type StructureKey = Vec<(Vec<AgentId>, Vec<TaskId>)>;

pub fn structure_key(coalitions: &[Coalition]) -> StructureKey {
    let mut merged: BTreeMap<Vec<AgentId>, BTreeSet<TaskId>> = BTreeMap::new();
    for c in coalitions {
        merged
            .entry(c.members.iter().cloned().collect())
            .or_default()
            .extend(c.assignment.tasks.iter().cloned());
    }
    merged.into_iter().map(|(m, t)| (m, t.into_iter().collect())).collect()
}

fn key_text(key: &StructureKey) -> String {
    key.iter()
        .map(|(m, t)| {
            let m: Vec<&str> = m.iter().map(AgentId::as_str).collect();
            let t: Vec<&str> = t.iter().map(TaskId::as_str).collect();
            format!("{}:{}", m.join("+"), t.join(","))
        })
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionStructure {
    pub id: StructureId,
    pub coalitions: Vec<Coalition>,
}

impl CoalitionStructure {
    pub fn new(id: StructureId, coalitions: Vec<Coalition>) -> Self {
        CoalitionStructure { id, coalitions }
    }

    pub fn support(&self) -> Support {
        Support::new(self.coalitions.iter().map(|c| c.assignment.clone()).collect())
    }

    pub fn key(&self) -> StructureKey {
        structure_key(&self.coalitions)
    }

    pub fn tasks(&self) -> BTreeSet<TaskId> {
        self.support().tasks()
    }

    pub fn agents(&self) -> BTreeSet<AgentId> {
        self.coalitions.iter().flat_map(|c| c.members.iter().cloned()).collect()
    }
}

impl fmt::Display for CoalitionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs: Vec<String> = self.coalitions.iter().map(|c| c.to_string()).collect();
        write!(f, "{} = {}", self.id, cs.join(" ; "))
    }
}

/// Interns structures by canonical key. The first representation wins.
#[derive(Debug, Clone, Default)]
pub struct StructureRegistry {
    structures: Vec<CoalitionStructure>,
    by_key: HashMap<StructureKey, usize>,
    by_id: HashMap<StructureId, usize>,
}

impl StructureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a structure under its own id. Returns the id already used
    /// for the same allocation, if any.
    pub fn insert(&mut self, s: CoalitionStructure) -> StructureId {
        let key = s.key();
        if let Some(&i) = self.by_key.get(&key) {
            return self.structures[i].id.clone();
        }
        let i = self.structures.len();
        self.by_key.insert(key, i);
        self.by_id.insert(s.id.clone(), i);
        let id = s.id.clone();
        self.structures.push(s);
        id
    }

    /// Registers `coalitions` under the next free `E<n>` id.
    pub fn intern(&mut self, coalitions: Vec<Coalition>) -> StructureId {
        let key = structure_key(&coalitions);
        if let Some(&i) = self.by_key.get(&key) {
            return self.structures[i].id.clone();
        }
        let mut n = self.structures.len();
        let id = loop {
            let id = StructureId::new(format!("E{n}"));
            if !self.by_id.contains_key(&id) {
                break id;
            }
            n += 1;
        };
        self.insert(CoalitionStructure::new(id.clone(), coalitions))
    }

    pub fn get(&self, id: &StructureId) -> Option<&CoalitionStructure> {
        self.by_id.get(id).map(|&i| &self.structures[i])
    }

    pub fn id_of(&self, coalitions: &[Coalition]) -> Option<&StructureId> {
        self.by_key.get(&structure_key(coalitions)).map(|&i| &self.structures[i].id)
    }

    pub fn len(&self) -> usize {
        self.structures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structures.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CoalitionStructure> {
        self.structures.iter()
    }

    pub fn ids(&self) -> Vec<StructureId> {
        self.structures.iter().map(|s| s.id.clone()).collect()
    }
}

/// How an agent ranks structures. Lower rank is better; equal ranks mean
/// indifference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ranking {
    Table(BTreeMap<StructureId, u32>),
    /// Pseudo-random preorder with `levels` indifference classes, derived
    /// from the allocation so equal allocations always rank equally.
    Hashed { salt: u64, levels: u32 },
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Better,
    Equivalent,
    Worse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalPreference {
    pub owner: AgentId,
    pub ranking: Ranking,
    pub reference: StructureId,
}

impl OrdinalPreference {
    pub fn new(owner: AgentId, ranking: Ranking, reference: StructureId) -> Self {
        OrdinalPreference { owner, ranking, reference }
    }

    pub fn of(scenario: &Scenario, agent: &AgentId) -> Self {
        Self::new(agent.clone(), scenario.preferences_of(agent).ranking, scenario.reference.clone())
    }

    pub fn rank(&self, s: &CoalitionStructure) -> Result<u32, PreferenceError> {
        match &self.ranking {
            Ranking::Table(t) => t.get(&s.id).copied().ok_or_else(|| PreferenceError::Unranked {
                agent: self.owner.clone(),
                structure: s.id.clone(),
            }),
            Ranking::Hashed { levels, .. } if s.id == self.reference => Ok(levels / 2),
            Ranking::Hashed { salt, levels } => {
                let h = fnv1a(salt.to_le_bytes(), 0xcbf2_9ce4_8422_2325);
                let h = fnv1a(self.owner.as_str().bytes().chain([0]), h);
                let h = fnv1a(key_text(&s.key()).into_bytes(), h);
                Ok((splitmix(h) % u64::from((*levels).max(1))) as u32)
            }
        }
    }

    pub fn reference_rank(&self) -> Result<u32, PreferenceError> {
        match &self.ranking {
            Ranking::Hashed { levels, .. } => Ok(levels / 2),
            Ranking::Table(t) => t.get(&self.reference).copied().ok_or_else(|| PreferenceError::Unranked {
                agent: self.owner.clone(),
                structure: self.reference.clone(),
            }),
        }
    }

    pub fn compare(&self, a: &CoalitionStructure, b: &CoalitionStructure) -> Result<Comparison, PreferenceError> {
        Ok(match self.rank(a)?.cmp(&self.rank(b)?) {
            Ordering::Less => Comparison::Better,
            Ordering::Equal => Comparison::Equivalent,
            Ordering::Greater => Comparison::Worse,
        })
    }

    /// At least as good as the reference state.
    pub fn acceptable(&self, s: &CoalitionStructure) -> Result<bool, PreferenceError> {
        Ok(self.rank(s)? <= self.reference_rank()?)
    }
}

/// Structures one agent ranks equally, tagged with that agent and rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub sender: AgentId,
    pub sender_rank: u32,
    pub structures: Vec<StructureId>,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.structures.iter().map(StructureId::as_str).collect();
        write!(f, "G({})", ids.join(","))
    }
}

/// Drops unacceptable structures and groups the rest by rank, best first.
/// Within a group structures keep id order.
pub fn sort_into_groups(
    prefs: &OrdinalPreference,
    structures: &[&CoalitionStructure],
) -> Result<Vec<Group>, PreferenceError> {
    let reference = prefs.reference_rank()?;
    let mut by_rank: BTreeMap<u32, BTreeSet<StructureId>> = BTreeMap::new();
    for s in structures {
        let r = prefs.rank(s)?;
        if r <= reference {
            by_rank.entry(r).or_default().insert(s.id.clone());
        }
    }
    Ok(by_rank
        .into_iter()
        .map(|(sender_rank, ids)| Group { sender: prefs.owner.clone(), sender_rank, structures: ids.into_iter().collect() })
        .collect())
}

/// Agents that approved a structure, in approval order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub structure: StructureId,
    approvers: Vec<AgentId>,
}

impl Signature {
    pub fn new(structure: StructureId) -> Self {
        Signature { structure, approvers: Vec::new() }
    }

    /// Appends `agent` unless it already signed.
    pub fn approve(&mut self, agent: &AgentId) {
        if !self.approvers.contains(agent) {
            self.approvers.push(agent.clone());
        }
    }

    pub fn approvers(&self) -> &[AgentId] {
        &self.approvers
    }

    pub fn signed_by(&self, agent: &AgentId) -> bool {
        self.approvers.contains(agent)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<&str> = self.approvers.iter().map(AgentId::as_str).collect();
        write!(f, "{}:{}", self.structure, a.join("+"))
    }
}

/// Agent sets able to perform `combo`, best first for `proposer`: smaller
/// first, then by the proposer's agent ranking, then by id. Every member
/// must be able to carry out every task of the combination.
pub fn coalition_candidates(
    scenario: &Scenario,
    proposer: &AgentId,
    combo: &TaskCombination,
    max_size: usize,
) -> Vec<BTreeSet<AgentId>> {
    let able: Vec<AgentId> = scenario
        .agents
        .iter()
        .filter(|a| combo.tasks.iter().all(|t| scenario.capabilities.can(a, t)))
        .cloned()
        .collect();
    let ranking = scenario.preferences_of(proposer).agent_ranking;
    let pos = |a: &AgentId| ranking.iter().position(|r| r == a).unwrap_or(ranking.len());
    let mut out: Vec<Vec<AgentId>> = Vec::new();
    subsets(&able, max_size.max(1), 0, &mut Vec::new(), &mut out);
    let sort_key = |m: &Vec<AgentId>| {
        let mut ps: Vec<(usize, AgentId)> = m.iter().map(|a| (pos(a), a.clone())).collect();
        ps.sort();
        (m.len(), ps)
    };
    out.sort_by_key(sort_key);
    out.into_iter().map(|m| m.into_iter().collect()).collect()
}

fn subsets(items: &[AgentId], max: usize, from: usize, cur: &mut Vec<AgentId>, out: &mut Vec<Vec<AgentId>>) {
    if !cur.is_empty() {
        out.push(cur.clone());
    }
    if cur.len() == max {
        return;
    }
    for i in from..items.len() {
        cur.push(items[i].clone());
        subsets(items, max, i + 1, cur, out);
        cur.pop();
    }
}

/// Coalition lists realizing `support`, one coalition per combination.
/// `beam` caps how many agent choices are expanded (`None` = all), taking
/// the proposer's preferred choices first.
pub fn structures_from_support(
    scenario: &Scenario,
    proposer: &AgentId,
    support: &Support,
    max_coalition_size: usize,
    beam: Option<usize>,
) -> Result<Vec<Vec<Coalition>>, Infeasible> {
    let mut options: Vec<Vec<BTreeSet<AgentId>>> = Vec::new();
    for c in &support.combinations {
        let cands = coalition_candidates(scenario, proposer, c, max_coalition_size);
        if cands.is_empty() {
            return Err(Infeasible { combination: c.to_string() });
        }
        options.push(cands);
    }
    let limit = beam.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut idx = vec![0usize; options.len()];
    loop {
        if out.len() >= limit {
            break;
        }
        out.push(
            support
                .combinations
                .iter()
                .zip(&idx)
                .zip(&options)
                .map(|((c, &i), opts)| Coalition { members: opts[i].clone(), assignment: c.clone() })
                .collect(),
        );
        // Odometer over candidate indices, last combination fastest.
        let mut k = options.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOptions {
    pub generate: GenerateOptions,
    pub tree: TreeOptions,
    pub max_coalition_size: usize,
    pub beam: Option<usize>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            generate: GenerateOptions::default(),
            tree: TreeOptions::default(),
            max_coalition_size: 1,
            beam: Some(1),
        }
    }
}

/// Everything one agent derives before negotiating.
#[derive(Debug, Clone)]
pub struct AgentPlan {
    pub agent: AgentId,
    pub combinations: Vec<TaskCombination>,
    pub partitions: Vec<Partition>,
    pub tree: CombinationTree,
    pub supports: Vec<Support>,
    pub structures: Vec<Vec<Coalition>>,
    pub infeasible: Vec<Infeasible>,
}

struct Supports {
    combinations: Vec<TaskCombination>,
    partitions: Vec<Partition>,
    tree: CombinationTree,
    supports: Vec<Support>,
    infeasible: Vec<Infeasible>,
}

fn plan_supports(scenario: &Scenario, agent: &AgentId, opts: &PlanOptions) -> Supports {
    let mut infeasible = Vec::new();
    let mut combinations = generate_combinations(scenario, agent, &opts.generate);
    combinations.retain(|c| {
        let ok = c.is_singleton() || !coalition_candidates(scenario, agent, c, opts.max_coalition_size).is_empty();
        if !ok {
            infeasible.push(Infeasible { combination: c.to_string() });
        }
        ok
    });
    let partitions = build_partitions(&combinations);
    let mut tree = CombinationTree::build(scenario, &partitions, opts.tree);
    let pool = task_pool(scenario, agent, &opts.generate.scope);
    let mut bases = tree.positive_sets();
    if bases.is_empty() {
        bases.push(Vec::new());
    }
    let mut supports: Vec<Support> = Vec::new();
    let mut support_keys = BTreeSet::new();
    for base in &bases {
        for s in complete_support(scenario, base, &pool) {
            if !s.combinations.is_empty() && support_keys.insert(s.key()) {
                supports.push(s);
            }
        }
    }
    Supports { combinations, partitions, tree, supports, infeasible }
}

// Without multi-task combinations there is nothing to rank agent choices
// by, so every assignment of the singleton supports is examined.
fn effective_beam(opts: &PlanOptions, tree: &CombinationTree) -> Option<usize> {
    if opts.generate.dependency_handling && !tree.is_empty() {
        opts.beam
    } else {
        None
    }
}

/// Upper bound on the number of structures `plan_agent` would produce
/// for every agent together, computed without materializing them.
pub fn structure_count_bound(scenario: &Scenario, opts: &PlanOptions) -> usize {
    let mut total = 0usize;
    for agent in &scenario.agents {
        let planned = plan_supports(scenario, agent, opts);
        let limit = effective_beam(opts, &planned.tree).unwrap_or(usize::MAX);
        for s in planned.supports {
            let product = s.combinations.iter().fold(1usize, |acc, c| {
                acc.saturating_mul(coalition_candidates(scenario, agent, c, opts.max_coalition_size).len())
            });
            total = total.saturating_add(product.min(limit));
        }
    }
    total
}

pub fn plan_agent(scenario: &Scenario, agent: &AgentId, opts: &PlanOptions) -> AgentPlan {
    let Supports { combinations, partitions, tree, supports, mut infeasible } = plan_supports(scenario, agent, opts);
    let beam = effective_beam(opts, &tree);
    let mut structures = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &supports {
        match structures_from_support(scenario, agent, s, opts.max_coalition_size, beam) {
            Ok(list) => {
                for coalitions in list {
                    if seen.insert(structure_key(&coalitions)) {
                        structures.push(coalitions);
                    }
                }
            }
            Err(e) => infeasible.push(e),
        }
    }
    AgentPlan { agent: agent.clone(), combinations, partitions, tree, supports, structures, infeasible }
}

/// Structure space of a negotiation. Declared structures are used as is;
/// otherwise the empty reference structure comes first, followed by every
/// agent's planned structures in agent id order.
pub fn build_universe(scenario: &Scenario, opts: &PlanOptions) -> (StructureRegistry, Vec<AgentPlan>) {
    let mut registry = StructureRegistry::new();
    if !scenario.structures.is_empty() {
        for d in &scenario.structures {
            registry.insert(CoalitionStructure::new(d.id.clone(), d.coalitions.clone()));
        }
        return (registry, Vec::new());
    }
    registry.insert(CoalitionStructure::new(scenario.reference.clone(), Vec::new()));
    let mut agents = scenario.agents.clone();
    agents.sort();
    let plans: Vec<AgentPlan> = agents.iter().map(|a| plan_agent(scenario, a, opts)).collect();
    for plan in &plans {
        for coalitions in &plan.structures {
            registry.intern(coalitions.clone());
        }
    }
    (registry, plans)
}

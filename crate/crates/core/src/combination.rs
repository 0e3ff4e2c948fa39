//! Task combinations, partitions, the binary combination tree and support
//! extraction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::ids::TaskId;
use crate::scenario::{AgentPreferences, Scenario};
use crate::task::{are_competitive, covering_relation, task_pair, Covering, TaskSpace};

/// A set of tasks an agent would like one coalition to carry out together.
///
/// Equality, ordering and hashing only look at the task set.
#[derive(Debug, Clone)]
pub struct TaskCombination {
    /// Sorted, duplicate-free.
    pub tasks: Vec<TaskId>,
    /// Highest-priority member for the owning agent; decides the partition.
    pub key_task: TaskId,
    /// Ordinal rank for the owner, lower is better.
    pub score: u64,
}

impl TaskCombination {
    /// Combination with a zero score keyed on its smallest task id.
    pub fn unscored(tasks: impl IntoIterator<Item = TaskId>) -> Self {
        let set: BTreeSet<TaskId> = tasks.into_iter().collect();
        let tasks: Vec<TaskId> = set.into_iter().collect();
        let key_task = tasks.first().cloned().unwrap_or_else(|| TaskId::from(""));
        TaskCombination { tasks, key_task, score: 0 }
    }

    pub fn singleton(task: TaskId) -> Self {
        Self::unscored([task])
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.tasks.len() == 1
    }

    pub fn contains(&self, t: &TaskId) -> bool {
        self.tasks.binary_search(t).is_ok()
    }

    pub fn shares_task(&self, other: &TaskCombination) -> bool {
        self.tasks.iter().any(|t| other.contains(t))
    }

    /// `T1+T2+T3`
    pub fn id(&self) -> String {
        self.tasks.iter().map(TaskId::as_str).collect::<Vec<_>>().join("+")
    }

    fn by_score(&self, other: &Self) -> Ordering {
        self.score.cmp(&other.score).then_with(|| self.tasks.cmp(&other.tasks))
    }
}

impl PartialEq for TaskCombination {
    fn eq(&self, other: &Self) -> bool {
        self.tasks == other.tasks
    }
}

impl Eq for TaskCombination {}

impl Hash for TaskCombination {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tasks.hash(state);
    }
}

impl Ord for TaskCombination {
    fn cmp(&self, other: &Self) -> Ordering {
        self.tasks.cmp(&other.tasks)
    }
}

impl PartialOrd for TaskCombination {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TaskCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.tasks.iter().map(TaskId::as_str).collect::<Vec<_>>().join(","))
    }
}

/// Which tasks an agent considers when grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskScope {
    /// Only tasks the agent itself can carry out.
    Capable,
    /// Every task some agent can carry out.
    Executable,
    /// An explicit task pool, e.g. the union of announced wants.
    Pool(Vec<TaskId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateOptions {
    pub max_size: usize,
    pub scope: TaskScope,
    /// When off, no tasks are grouped and only singletons come out.
    pub dependency_handling: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { max_size: 3, scope: TaskScope::Capable, dependency_handling: true }
    }
}

/// Priority rank of a task for an agent; unlisted tasks share the worst rank.
pub fn priority_rank(prefs: &AgentPreferences, task: &TaskId) -> u64 {
    prefs.tier_of(task).unwrap_or(prefs.priority.len()) as u64
}

fn key_of(prefs: &AgentPreferences, tasks: &[TaskId]) -> TaskId {
    tasks
        .iter()
        .min_by(|a, b| priority_rank(prefs, a).cmp(&priority_rank(prefs, b)).then_with(|| a.cmp(b)))
        .cloned()
        .expect("non-empty combination")
}

fn scored(prefs: &AgentPreferences, tasks: Vec<TaskId>, score: Option<u64>) -> TaskCombination {
    let mut c = TaskCombination::unscored(tasks);
    c.key_task = key_of(prefs, &c.tasks);
    c.score = score.unwrap_or_else(|| c.tasks.iter().map(|t| priority_rank(prefs, t)).sum());
    c
}

/// Task pairs that may be grouped into one combination: declared
/// complementary, dependent and total-covering edges, plus total covering
/// derived from capabilities.
pub fn linked_pairs(scenario: &Scenario, pool: &[TaskId]) -> BTreeSet<(TaskId, TaskId)> {
    let mut pairs: BTreeSet<(TaskId, TaskId)> = scenario
        .relationships
        .iter()
        .filter(|r| r.kind.links_tasks())
        .map(|r| task_pair(&r.a, &r.b))
        .collect();
    for (i, a) in pool.iter().enumerate() {
        for b in &pool[i + 1..] {
            if matches!(covering_relation(scenario, a, b), Ok(Covering::Total)) {
                pairs.insert(task_pair(a, b));
            }
        }
    }
    pairs
}

pub fn task_pool(scenario: &Scenario, agent: &crate::ids::AgentId, scope: &TaskScope) -> Vec<TaskId> {
    let mut pool: Vec<TaskId> = match scope {
        TaskScope::Capable => scenario.capabilities.tasks_of(agent).cloned().collect(),
        TaskScope::Executable => scenario.executable_tasks(),
        TaskScope::Pool(ts) => ts.clone(),
    };
    pool.sort();
    pool.dedup();
    pool
}

/// The agent's preferred task combinations, best first.
pub fn generate_combinations(
    scenario: &Scenario,
    agent: &crate::ids::AgentId,
    opts: &GenerateOptions,
) -> Vec<TaskCombination> {
    let prefs = scenario.preferences_of(agent);
    let pool = task_pool(scenario, agent, &opts.scope);
    let mut out: Vec<TaskCombination> = pool.iter().map(|t| scored(&prefs, vec![t.clone()], None)).collect();
    if opts.dependency_handling && opts.max_size >= 2 {
        let in_pool: BTreeSet<&TaskId> = pool.iter().collect();
        let clean = |tasks: &[TaskId]| {
            tasks.iter().enumerate().all(|(i, a)| tasks[i + 1..].iter().all(|b| !are_competitive(scenario, a, b)))
        };
        match &prefs.combinations {
            Some(listed) => {
                for (pos, tasks) in listed.iter().enumerate() {
                    let set: BTreeSet<TaskId> = tasks.iter().cloned().collect();
                    if set.len() >= 2
                        && set.len() <= opts.max_size
                        && set.iter().all(|t| in_pool.contains(t))
                        && clean(&set.iter().cloned().collect::<Vec<_>>())
                    {
                        out.push(scored(&prefs, set.into_iter().collect(), Some(pos as u64)));
                    }
                }
            }
            None => {
                let linked = linked_pairs(scenario, &pool);
                let mut cliques = Vec::new();
                grow_cliques(&pool, &linked, opts.max_size, 0, &mut Vec::new(), &mut cliques);
                for tasks in cliques {
                    if clean(&tasks) {
                        out.push(scored(&prefs, tasks, None));
                    }
                }
            }
        }
    }
    out.sort_by(TaskCombination::by_score);
    out.dedup();
    out
}

fn grow_cliques(
    pool: &[TaskId],
    linked: &BTreeSet<(TaskId, TaskId)>,
    max_size: usize,
    from: usize,
    current: &mut Vec<TaskId>,
    out: &mut Vec<Vec<TaskId>>,
) {
    if current.len() >= 2 {
        out.push(current.clone());
    }
    if current.len() == max_size {
        return;
    }
    for i in from..pool.len() {
        let t = &pool[i];
        if current.iter().all(|c| linked.contains(&task_pair(c, t))) {
            current.push(t.clone());
            grow_cliques(pool, linked, max_size, i + 1, current, out);
            current.pop();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub key_task: TaskId,
    /// Best first.
    pub combinations: Vec<TaskCombination>,
    /// Best score among the members.
    pub rank: u64,
}

/// Groups multi-task combinations by key task. Singletons are skipped.
pub fn build_partitions(combos: &[TaskCombination]) -> Vec<Partition> {
    let mut by_key: BTreeMap<TaskId, Vec<TaskCombination>> = BTreeMap::new();
    for c in combos.iter().filter(|c| c.len() >= 2) {
        let members = by_key.entry(c.key_task.clone()).or_default();
        if !members.contains(c) {
            members.push(c.clone());
        }
    }
    let mut parts: Vec<Partition> = by_key
        .into_iter()
        .map(|(key_task, mut combinations)| {
            combinations.sort_by(TaskCombination::by_score);
            let rank = combinations[0].score;
            Partition { key_task, combinations, rank }
        })
        .collect();
    parts.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.key_task.cmp(&b.key_task)));
    parts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeOptions {
    /// Expand children only when asked.
    pub lazy: bool,
    /// Limit on the number of positive branches along a path. `None` uses
    /// the number of partitions.
    pub max_depth: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions { lazy: false, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Index into the traversal order.
    pub item: usize,
    /// Traversal indices retained on positive branches above this node.
    pub above: Vec<usize>,
    pub positive: Option<usize>,
    pub negative: Option<usize>,
    expanded: bool,
}

/// Binary tree over combinations: the positive child assumes the node is
/// in the support, the negative child assumes it is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinationTree {
    order: Vec<TaskCombination>,
    competitive: BTreeSet<(usize, usize)>,
    nodes: Vec<TreeNode>,
    opts: TreeOptions,
    max_depth: usize,
}

impl CombinationTree {
    pub fn build(scenario: &Scenario, partitions: &[Partition], opts: TreeOptions) -> Self {
        // Partition order, then a stable sort by score so scores never drop
        // along a path.
        let mut order: Vec<TaskCombination> =
            partitions.iter().flat_map(|p| p.combinations.iter().cloned()).collect();
        order.sort_by_key(|c| c.score);
        let mut competitive = BTreeSet::new();
        for i in 0..order.len() {
            for j in i + 1..order.len() {
                let cross = order[i]
                    .tasks
                    .iter()
                    .any(|a| order[j].tasks.iter().any(|b| are_competitive(scenario, a, b)));
                if cross {
                    competitive.insert((i, j));
                }
            }
        }
        let mut tree = CombinationTree {
            max_depth: opts.max_depth.unwrap_or(partitions.len()),
            order,
            competitive,
            nodes: Vec::new(),
            opts,
        };
        if !tree.order.is_empty() {
            tree.nodes.push(TreeNode { item: 0, above: Vec::new(), positive: None, negative: None, expanded: false });
            if !opts.lazy {
                tree.expand_all();
            }
        }
        tree
    }

    pub fn options(&self) -> TreeOptions {
        self.opts
    }

    pub fn order(&self) -> &[TaskCombination] {
        &self.order
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> Option<&TaskCombination> {
        self.nodes.first().map(|n| &self.order[n.item])
    }

    pub fn combination(&self, node: usize) -> &TaskCombination {
        &self.order[self.nodes[node].item]
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn compatible(&self, j: usize, set: &[usize]) -> bool {
        set.iter().all(|&i| {
            !self.order[i].shares_task(&self.order[j]) && !self.competitive.contains(&(i.min(j), i.max(j)))
        })
    }

    fn next_compatible(&self, after: usize, set: &[usize]) -> Option<usize> {
        (after + 1..self.order.len()).find(|&j| self.compatible(j, set))
    }

    /// Computes the children of `node` if not done yet.
    pub fn expand(&mut self, node: usize) {
        if self.nodes[node].expanded {
            return;
        }
        let item = self.nodes[node].item;
        let above = self.nodes[node].above.clone();
        let mut with = above.clone();
        with.push(item);
        let positive = if with.len() < self.max_depth + 1 {
            self.next_compatible(item, &with).map(|j| self.push(j, with))
        } else {
            None
        };
        let negative = self.next_compatible(item, &above).map(|j| self.push(j, above));
        let n = &mut self.nodes[node];
        n.positive = positive;
        n.negative = negative;
        n.expanded = true;
    }

    fn push(&mut self, item: usize, above: Vec<usize>) -> usize {
        self.nodes.push(TreeNode { item, above, positive: None, negative: None, expanded: false });
        self.nodes.len() - 1
    }

    pub fn expand_all(&mut self) {
        let mut i = 0;
        while i < self.nodes.len() {
            self.expand(i);
            i += 1;
        }
    }

    /// Positive sets read at the leaves, in depth-first order, deduplicated.
    pub fn positive_sets(&mut self) -> Vec<Vec<TaskCombination>> {
        if self.nodes.is_empty() {
            return Vec::new();
        }
        self.expand_all();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let mut with = node.above.clone();
            with.push(node.item);
            if node.positive.is_none() {
                push_unique(&mut out, with);
            }
            if node.negative.is_none() && !node.above.is_empty() {
                push_unique(&mut out, node.above.clone());
            }
            // Negative subtree below the positive one so the positive is read first.
            if let Some(n) = node.negative {
                stack.push(n);
            }
            if let Some(p) = node.positive {
                stack.push(p);
            }
        }
        out.into_iter().map(|set| set.into_iter().map(|i| self.order[i].clone()).collect()).collect()
    }

    /// One line per node: indentation by depth, `*` root, `+`/`-` branch,
    /// the combination and its score.
    pub fn dump(&mut self) -> String {
        self.expand_all();
        let mut out = String::new();
        let mut stack = vec![(0usize, 0usize, '*')];
        if self.nodes.is_empty() {
            return out;
        }
        while let Some((id, depth, sign)) = stack.pop() {
            let node = &self.nodes[id];
            let c = &self.order[node.item];
            out.push_str(&format!("{}{} {} score={}\n", "  ".repeat(depth), sign, c, c.score));
            if let Some(n) = node.negative {
                stack.push((n, depth + 1, '-'));
            }
            if let Some(p) = node.positive {
                stack.push((p, depth + 1, '+'));
            }
        }
        out
    }

    fn rebuild(&mut self, scenario: &Scenario, partitions: &[Partition]) {
        *self = CombinationTree::build(scenario, partitions, self.opts);
    }
}

fn push_unique(out: &mut Vec<Vec<usize>>, mut set: Vec<usize>) {
    let mut key = set.clone();
    key.sort_unstable();
    if !out.iter().any(|s| {
        let mut k = s.clone();
        k.sort_unstable();
        k == key
    }) {
        out.push(std::mem::take(&mut set));
    }
}

/// Task-disjoint combinations that one coalition structure performs.
#[derive(Debug, Clone)]
pub struct Support {
    pub combinations: Vec<TaskCombination>,
}

impl Support {
    pub fn new(combinations: Vec<TaskCombination>) -> Self {
        Support { combinations }
    }

    pub fn tasks(&self) -> BTreeSet<TaskId> {
        self.combinations.iter().flat_map(|c| c.tasks.iter().cloned()).collect()
    }

    pub fn covers(&self, t: &TaskId) -> bool {
        self.combinations.iter().any(|c| c.contains(t))
    }

    pub fn contains(&self, c: &TaskCombination) -> bool {
        self.combinations.contains(c)
    }

    /// Order-independent identity.
    pub fn key(&self) -> Vec<Vec<TaskId>> {
        let mut k: Vec<Vec<TaskId>> = self.combinations.iter().map(|c| c.tasks.clone()).collect();
        k.sort();
        k
    }

    pub fn is_task_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.combinations.iter().flat_map(|c| c.tasks.iter()).all(|t| seen.insert(t))
    }
}

impl PartialEq for Support {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Support {}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.combinations.iter().map(|c| c.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// Supports read off the tree, each completed with the wanted singletons
/// whose task is not covered yet and not competitive with anything in it.
/// An empty tree yields the support made of the wanted singletons alone.
pub fn enumerate_supports(
    scenario: &Scenario,
    tree: &mut CombinationTree,
    wanted_singletons: &[TaskCombination],
) -> Vec<Support> {
    let mut sets = tree.positive_sets();
    if sets.is_empty() {
        sets.push(Vec::new());
    }
    let mut out: Vec<Support> = Vec::new();
    for mut combos in sets {
        for s in wanted_singletons {
            let t = &s.tasks[0];
            let clash = combos.iter().any(|c| c.contains(t) || c.tasks.iter().any(|u| are_competitive(scenario, t, u)));
            if !clash {
                combos.push(s.clone());
            }
        }
        let support = Support::new(combos);
        if !support.combinations.is_empty() && !out.contains(&support) {
            out.push(support);
        }
    }
    out
}

/// Every maximal way of completing `base` with singletons from `pool`
/// without a competitive pair. Without competition there is exactly one.
pub fn complete_support(scenario: &Scenario, base: &[TaskCombination], pool: &[TaskId]) -> Vec<Support> {
    let covered: BTreeSet<&TaskId> = base.iter().flat_map(|c| c.tasks.iter()).collect();
    let free: Vec<TaskId> = pool
        .iter()
        .filter(|t| !covered.contains(t))
        .filter(|t| !covered.iter().any(|u| are_competitive(scenario, t, u)))
        .cloned()
        .collect();
    maximal_independent_sets(scenario, &free)
        .into_iter()
        .map(|set| {
            let mut combos = base.to_vec();
            combos.extend(set.into_iter().map(TaskCombination::singleton));
            Support::new(combos)
        })
        .collect()
}

/// Maximal task subsets of `tasks` with no competitive pair, in a
/// deterministic order.
pub fn maximal_independent_sets(space: &impl TaskSpace, tasks: &[TaskId]) -> Vec<Vec<TaskId>> {
    let n = tasks.len();
    let clash: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && are_competitive(space, &tasks[i], &tasks[j])).collect())
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    mis_rec(&clash, 0, &mut chosen, &mut out);
    out.into_iter().map(|set: Vec<usize>| set.into_iter().map(|i| tasks[i].clone()).collect()).collect()
}

fn mis_rec(clash: &[Vec<bool>], i: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let n = clash.len();
    if i == n {
        let maximal = (0..n).all(|k| chosen.contains(&k) || chosen.iter().any(|&c| clash[c][k]));
        if maximal {
            out.push(chosen.clone());
        }
        return;
    }
    let free = chosen.iter().all(|&c| !clash[c][i]);
    if free {
        chosen.push(i);
        mis_rec(clash, i + 1, chosen, out);
        chosen.pop();
        // Leaving `i` out only makes sense if something else blocks it later.
        if (i + 1..n).any(|k| clash[i][k]) {
            mis_rec(clash, i + 1, chosen, out);
        }
    } else {
        mis_rec(clash, i + 1, chosen, out);
    }
}

/// Two combinations with equal score for their owner that cannot appear in
/// the same support because they hold competitive tasks.
pub fn combinations_competitive(space: &impl TaskSpace, a: &TaskCombination, b: &TaskCombination) -> bool {
    a.score == b.score && a.tasks.iter().any(|x| b.tasks.iter().any(|y| are_competitive(space, x, y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneOutcome {
    Removed,
    /// The combination was not in any partition; nothing changed.
    Unknown,
}

/// Removes `combo` from its partition and rebuilds the tree so that no
/// support contains it any more.
pub fn prune_combination(
    scenario: &Scenario,
    partitions: &mut Vec<Partition>,
    tree: &mut CombinationTree,
    combo: &TaskCombination,
) -> PruneOutcome {
    let mut removed = false;
    for p in partitions.iter_mut() {
        let before = p.combinations.len();
        p.combinations.retain(|c| c != combo);
        removed |= p.combinations.len() != before;
    }
    if !removed {
        return PruneOutcome::Unknown;
    }
    partitions.retain(|p| !p.combinations.is_empty());
    for p in partitions.iter_mut() {
        p.rank = p.combinations[0].score;
    }
    partitions.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.key_task.cmp(&b.key_task)));
    tree.rebuild(scenario, partitions);
    PruneOutcome::Removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::AgentId;

    fn ts(ids: &[&str]) -> Vec<TaskId> {
        ids.iter().map(|s| TaskId::from(*s)).collect()
    }

    fn combo(ids: &[&str], score: u64) -> TaskCombination {
        let mut c = TaskCombination::unscored(ts(ids));
        c.score = score;
        c
    }

    fn scenario(text: &str) -> Scenario {
        Scenario::parse(text).unwrap()
    }

    #[test]
    fn singleton_only_agent() {
        let s = scenario("[tasks]\nT1\nT2\n[agents]\nA1 A2\n[capabilities]\nA1: T1\nA2: T2\n[relationships]\ncomplementary T1 T2\n");
        let got = generate_combinations(&s, &AgentId::from("A1"), &GenerateOptions::default());
        assert_eq!(got, vec![TaskCombination::singleton(TaskId::from("T1"))]);
    }

    #[test]
    fn competitive_pairs_are_never_grouped() {
        let s = scenario(
            "[tasks]\nT1 indicator=x\nT2 indicator=x\nT3\n[agents]\nA1\n[capabilities]\nA1: T1 T2 T3\n\
             [relationships]\ncomplementary T1 T2\ncomplementary T2 T3\n",
        );
        let got = generate_combinations(&s, &AgentId::from("A1"), &GenerateOptions::default());
        let ids: Vec<String> = got.iter().map(TaskCombination::id).collect();
        // T1 and T2 share A1's capable set, so they are total covering too,
        // but they compute the same indicator.
        assert!(!ids.contains(&"T1+T2".to_string()));
        assert!(ids.contains(&"T2+T3".to_string()));
        assert!(ids.contains(&"T1+T3".to_string()));
    }

    #[test]
    fn single_combination_single_partition() {
        let parts = build_partitions(&[combo(&["T4", "T5"], 3)]);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].key_task, TaskId::from("T4"));
    }

    #[test]
    fn single_node_tree() {
        let s = scenario("[tasks]\nT1\nT2\n[agents]\nA1\n");
        let parts = build_partitions(&[combo(&["T1", "T2"], 0)]);
        let mut tree = CombinationTree::build(&s, &parts, TreeOptions::default());
        assert_eq!(tree.nodes().len(), 1);
        assert!(tree.nodes()[0].positive.is_none() && tree.nodes()[0].negative.is_none());
        let sup = enumerate_supports(&s, &mut tree, &[]);
        assert_eq!(sup.len(), 1);
        assert_eq!(sup[0].to_string(), "<{T1,T2}>");
    }

    #[test]
    fn lazy_tree_expands_on_demand() {
        let s = scenario("[tasks]\nT1\nT2\nT3\n[agents]\nA1\n");
        let parts = build_partitions(&[combo(&["T1", "T2"], 0), combo(&["T2", "T3"], 1)]);
        let mut lazy = CombinationTree::build(&s, &parts, TreeOptions { lazy: true, max_depth: None });
        assert_eq!(lazy.nodes().len(), 1);
        let mut eager = CombinationTree::build(&s, &parts, TreeOptions::default());
        assert_eq!(lazy.positive_sets(), eager.positive_sets());
    }

    #[test]
    fn pruning_unknown_is_a_no_op() {
        let s = scenario("[tasks]\nT1\nT2\nT3\n[agents]\nA1\n");
        let mut parts = build_partitions(&[combo(&["T1", "T2"], 0)]);
        let mut tree = CombinationTree::build(&s, &parts, TreeOptions::default());
        let before = (parts.clone(), tree.clone());
        assert_eq!(prune_combination(&s, &mut parts, &mut tree, &combo(&["T2", "T3"], 0)), PruneOutcome::Unknown);
        assert_eq!((parts, tree), before);
    }

    #[test]
    fn maximal_independent_sets_of_a_path() {
        let s = scenario("[tasks]\nT1\nT2\nT3\n[agents]\nA1\n[relationships]\ncompetitive T1 T2\ncompetitive T2 T3\n");
        let sets = maximal_independent_sets(&s, &ts(&["T1", "T2", "T3"]));
        assert_eq!(sets, vec![ts(&["T1", "T3"]), ts(&["T2"])]);
    }

    #[test]
    fn completion_with_competition_branches() {
        let s = scenario("[tasks]\nT1\nT2\nT3\n[agents]\nA1\n[relationships]\ncompetitive T2 T3\n");
        let base = vec![combo(&["T1"], 0)];
        let got = complete_support(&s, &base, &ts(&["T1", "T2", "T3"]));
        let shown: Vec<String> = got.iter().map(|s| s.to_string()).collect();
        assert_eq!(shown, ["<{T1},{T2}>", "<{T1},{T3}>"]);
    }

    #[test]
    fn competitive_combinations_need_equal_scores() {
        let s = scenario("[tasks]\nT1 indicator=f\nT2 indicator=f\nT3\nT4\n[agents]\nA1\n");
        let a = combo(&["T1", "T3"], 2);
        let b = combo(&["T2", "T4"], 2);
        assert!(combinations_competitive(&s, &a, &b));
        assert!(!combinations_competitive(&s, &a, &combo(&["T2", "T4"], 3)));
        assert!(!combinations_competitive(&s, &a, &combo(&["T4"], 2)));
    }
}

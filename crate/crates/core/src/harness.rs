//! Random scenarios, experiment sweeps, metrics and the brute-force Pareto
//! oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combination::TaskScope;
use crate::error::{ConfigError, OracleError, ScenarioError};
use crate::ids::{AgentId, StructureId, TaskId};
use crate::negotiation::{run_negotiation, MessageKind, NegotiationConfig, NegotiationOutcome, WantVector};
use crate::preference::{build_universe, structure_count_bound, AgentPlan, OrdinalPreference, PlanOptions, Ranking, StructureRegistry};
use crate::scenario::{AgentPreferences, Scenario};
use crate::task::{task_pair, RelationKind, Task, TaskRelationship};

pub const ORACLE_LIMIT: usize = 100_000;

pub const CSV_HEADER: [&str; 10] = [
    "mode",
    "agents",
    "tasks",
    "seed",
    "messages",
    "structures_sent",
    "structures_evaluated",
    "runtime_ms",
    "outcome",
    "solution_id",
];

/// Counters for one negotiation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub mode: String,
    pub agents: usize,
    pub tasks: usize,
    pub seed: u64,
    pub messages: u64,
    /// Sum of the sizes of all proposed groups.
    pub structures_sent: u64,
    /// Distinct structures the agents ranked.
    pub structures_evaluated: u64,
    pub proposals: u64,
    pub runtime_ms: f64,
    pub outcome: String,
    pub solution_id: Option<StructureId>,
    pub pressure: bool,
}

impl Metrics {
    pub fn from_outcome(scenario: &Scenario, outcome: &NegotiationOutcome, deps: bool, seed: u64, runtime_ms: f64) -> Self {
        let mut sent = 0;
        let mut proposals = 0;
        for m in &outcome.transcript {
            if let MessageKind::Propose { group, .. } = &m.kind {
                sent += group.structures.len() as u64;
                proposals += 1;
            }
        }
        Metrics {
            mode: mode_label(deps).to_owned(),
            agents: scenario.agents.len(),
            tasks: scenario.tasks.len(),
            seed,
            messages: outcome.transcript.len() as u64,
            structures_sent: sent,
            structures_evaluated: outcome.structures_evaluated as u64,
            proposals,
            runtime_ms,
            outcome: outcome.result.label().to_owned(),
            solution_id: outcome.result.solution().cloned(),
            pressure: outcome.pressure,
        }
    }

    /// CSV fields in header order. `runtime_ms` is left empty when
    /// `with_runtime` is false so that output can be compared byte for byte.
    pub fn record(&self, with_runtime: bool) -> Vec<String> {
        vec![
            self.mode.clone(),
            self.agents.to_string(),
            self.tasks.to_string(),
            self.seed.to_string(),
            self.messages.to_string(),
            self.structures_sent.to_string(),
            self.structures_evaluated.to_string(),
            if with_runtime { format!("{:.3}", self.runtime_ms) } else { String::new() },
            self.outcome.clone(),
            self.solution_id.as_ref().map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn mode_label(deps: bool) -> &'static str {
    if deps {
        "on"
    } else {
        "off"
    }
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[Metrics], with_runtime: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record(with_runtime))?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters of the random scenario generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub agents: usize,
    pub tasks: usize,
    /// Probability that a task pair carries a relationship edge.
    pub density: f64,
    /// Share of edges that are competitive.
    pub competitive_fraction: f64,
    /// Upper bound on how many agents can carry out one task.
    pub max_capable: usize,
    /// Length of each agent's priority list; all tasks when `None`.
    pub wanted_per_agent: Option<usize>,
    /// Indifference classes of the hashed preference orders.
    pub levels: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            agents: 3,
            tasks: 4,
            density: 0.3,
            competitive_fraction: 0.1,
            max_capable: 2,
            wanted_per_agent: None,
            levels: 5,
        }
    }
}

impl GeneratorParams {
    pub fn new(agents: usize, tasks: usize, density: f64) -> Self {
        GeneratorParams { agents, tasks, density, ..Self::default() }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Generator(m));
        if self.agents == 0 || self.tasks == 0 {
            return bad("need at least one agent and one task".into());
        }
        if !(0.0..=1.0).contains(&self.density) || !(0.0..=1.0).contains(&self.competitive_fraction) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.max_capable == 0 || self.levels == 0 {
            return bad("max_capable and levels must be positive".into());
        }
        if let Some(w) = self.wanted_per_agent {
            if w > self.tasks {
                return bad(format!("{w} wanted tasks per agent but only {} tasks", self.tasks));
            }
        }
        Ok(())
    }
}

pub fn generate_random_scenario(params: &GeneratorParams, seed: u64) -> Result<Scenario, ConfigError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: Vec<AgentId> = (1..=params.agents).map(|i| AgentId::new(format!("A{i}"))).collect();
    let tasks: Vec<TaskId> = (1..=params.tasks).map(|i| TaskId::new(format!("T{i}"))).collect();
    let mut capable: Vec<BTreeSet<AgentId>> = Vec::new();
    for _ in &tasks {
        let k = rng.gen_range(1..=params.agents.min(params.max_capable));
        capable.push(agents.choose_multiple(&mut rng, k).cloned().collect());
    }
    let mut relationships = Vec::new();
    for i in 0..tasks.len() {
        for j in i + 1..tasks.len() {
            if !rng.gen_bool(params.density) {
                continue;
            }
            let (a, b) = (tasks[i].clone(), tasks[j].clone());
            let rel = if rng.gen_bool(params.competitive_fraction) {
                TaskRelationship::new(RelationKind::Competitive, a, b)
            } else {
                // Grouped tasks need someone able to do both.
                if capable[i].is_disjoint(&capable[j]) {
                    let pick = capable[i].iter().next().cloned().expect("every task has a capable agent");
                    capable[j].insert(pick);
                }
                if rng.gen_bool(0.5) {
                    TaskRelationship::new(RelationKind::TotalComplementary, a, b)
                } else if rng.gen_bool(0.5) {
                    TaskRelationship::dependent(a, b)
                } else {
                    TaskRelationship::dependent(b, a)
                }
            };
            relationships.push(rel.expect("distinct tasks"));
        }
    }
    let mut scenario = Scenario {
        tasks: tasks.iter().map(|t| Task::new(t.clone())).collect(),
        agents: agents.clone(),
        relationships,
        ..Scenario::default()
    };
    for (t, set) in tasks.iter().zip(&capable) {
        for a in set {
            scenario.capabilities.grant(a.clone(), t.clone());
        }
    }
    let wanted = params.wanted_per_agent.unwrap_or(params.tasks);
    for a in &agents {
        let mut order = tasks.clone();
        order.shuffle(&mut rng);
        order.truncate(wanted);
        let prefs = AgentPreferences {
            priority: order.into_iter().map(|t| vec![t]).collect(),
            combinations: None,
            ranking: Ranking::Hashed { salt: rng.gen(), levels: params.levels },
            agent_ranking: Vec::new(),
        };
        scenario.preferences.insert(a.clone(), prefs);
    }
    Ok(scenario)
}

/// Task pool announced by every agent at initiation.
pub fn announced_pool(scenario: &Scenario) -> Vec<TaskId> {
    let executable: BTreeSet<TaskId> = scenario.executable_tasks().into_iter().collect();
    let pool: BTreeSet<TaskId> = scenario
        .agents
        .iter()
        .flat_map(|a| WantVector::derive(scenario, a).tasks().cloned().collect::<Vec<_>>())
        .filter(|t| executable.contains(t))
        .collect();
    pool.into_iter().collect()
}

/// Structure space a negotiation with these planning options works on.
pub fn structure_universe(scenario: &Scenario, plan: &PlanOptions) -> (StructureRegistry, Vec<AgentPlan>) {
    let mut plan = plan.clone();
    plan.generate.scope = TaskScope::Pool(announced_pool(scenario));
    build_universe(scenario, &plan)
}

/// Pareto frontier of `registry` under the agents' ordinal preferences,
/// in registry order.
pub fn pareto_frontier(scenario: &Scenario, registry: &StructureRegistry) -> Result<Vec<StructureId>, OracleError> {
    let mut agents = scenario.agents.clone();
    agents.sort();
    let prefs: Vec<OrdinalPreference> = agents.iter().map(|a| OrdinalPreference::of(scenario, a)).collect();
    let mut rows: Vec<(Vec<u32>, usize, StructureId)> = Vec::with_capacity(registry.len());
    for (i, s) in registry.iter().enumerate() {
        let ranks = prefs
            .iter()
            .map(|p| p.rank(s))
            .collect::<Result<Vec<u32>, _>>()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        rows.push((ranks, i, s.id.clone()));
    }
    // A dominating vector is lexicographically smaller, so it is always
    // seen before the vectors it dominates.
    rows.sort();
    let mut frontier: Vec<(Vec<u32>, usize, StructureId)> = Vec::new();
    for row in rows {
        let dominated = frontier
            .iter()
            .any(|f| f.0.iter().zip(&row.0).all(|(a, b)| a <= b) && f.0 != row.0);
        if !dominated {
            frontier.push(row);
        }
    }
    frontier.sort_by_key(|f| f.1);
    Ok(frontier.into_iter().map(|f| f.2).collect())
}

/// Exhaustive Pareto frontier over every structure the negotiation could
/// consider.
pub fn brute_force_pareto(scenario: &Scenario, plan: &PlanOptions) -> Result<Vec<StructureId>, OracleError> {
    scenario.validate()?;
    if scenario.structures.is_empty() {
        let mut pooled = plan.clone();
        pooled.generate.scope = TaskScope::Pool(announced_pool(scenario));
        let bound = structure_count_bound(scenario, &pooled);
        if bound > ORACLE_LIMIT {
            return Err(OracleError::TooLarge { size: bound, limit: ORACLE_LIMIT });
        }
    }
    let (registry, _) = structure_universe(scenario, plan);
    if registry.len() > ORACLE_LIMIT {
        return Err(OracleError::TooLarge { size: registry.len(), limit: ORACLE_LIMIT });
    }
    pareto_frontier(scenario, &registry)
}

/// Runs one negotiation and measures it.
pub fn measured_run(
    scenario: &Scenario,
    config: &NegotiationConfig,
) -> Result<(NegotiationOutcome, Metrics), ScenarioError> {
    let start = Instant::now();
    let outcome = run_negotiation(scenario, config.clone())?;
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    let metrics = Metrics::from_outcome(scenario, &outcome, config.plan.generate.dependency_handling, config.seed, ms);
    Ok((outcome, metrics))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskCount {
    Fixed(usize),
    /// Tasks = agents × factor, rounded.
    PerAgent(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub min_agents: usize,
    pub max_agents: usize,
    pub tasks: TaskCount,
    pub density: f64,
    pub max_capable: usize,
    pub dependency_handling: bool,
    pub repetitions: usize,
    pub seed: u64,
    pub deadline: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            min_agents: 2,
            max_agents: 10,
            tasks: TaskCount::PerAgent(1.0),
            density: 0.3,
            max_capable: 2,
            dependency_handling: true,
            repetitions: 10,
            seed: 0,
            deadline: 1000,
        }
    }
}

impl ExperimentConfig {
    fn check(&self) -> Result<(), ConfigError> {
        if self.repetitions == 0 {
            return Err(ConfigError::Experiment("repetitions must be at least 1".into()));
        }
        if self.min_agents == 0 || self.min_agents > self.max_agents {
            return Err(ConfigError::Experiment("empty agent range".into()));
        }
        Ok(())
    }

    pub fn tasks_for(&self, agents: usize) -> usize {
        match self.tasks {
            TaskCount::Fixed(m) => m,
            TaskCount::PerAgent(f) => ((agents as f64 * f).round() as usize).max(1),
        }
    }

    /// Seed of repetition `rep` at `agents`.
    pub fn run_seed(&self, agents: usize, rep: usize) -> u64 {
        self.seed.wrapping_add(agents as u64 * 1000 + rep as u64)
    }

    pub fn negotiation(&self, seed: u64) -> NegotiationConfig {
        let mut cfg = NegotiationConfig { seed, deadline: self.deadline, ..NegotiationConfig::default() };
        cfg.plan.generate.dependency_handling = self.dependency_handling;
        cfg
    }
}

/// Means over the repetitions of one agent count.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub mode: String,
    pub agents: usize,
    pub tasks: usize,
    pub runs: usize,
    pub solved: usize,
    pub messages: f64,
    pub structures_sent: f64,
    pub structures_evaluated: f64,
    pub runtime_ms: f64,
}

impl PointSummary {
    pub fn record(&self, seed: u64, with_runtime: bool) -> Vec<String> {
        vec![
            self.mode.clone(),
            self.agents.to_string(),
            self.tasks.to_string(),
            seed.to_string(),
            format!("{:.2}", self.messages),
            format!("{:.2}", self.structures_sent),
            format!("{:.2}", self.structures_evaluated),
            if with_runtime { format!("{:.3}", self.runtime_ms) } else { String::new() },
            format!("solved {}/{}", self.solved, self.runs),
            String::new(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// One row per run, failed runs included.
    pub rows: Vec<Metrics>,
    pub points: Vec<PointSummary>,
    /// Runs that could not start, with the reason.
    pub errors: Vec<(usize, u64, String)>,
}

impl ExperimentReport {
    pub fn write_points_csv<W: Write>(&self, out: W, with_runtime: bool) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record(p.record(self.config.seed, with_runtime))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ConfigError> {
    config.check()?;
    let jobs: Vec<(usize, usize)> = (config.min_agents..=config.max_agents)
        .flat_map(|n| (0..config.repetitions).map(move |r| (n, r)))
        .collect();
    let results: Vec<(usize, u64, Result<Metrics, String>)> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let seed = config.run_seed(n, rep);
            let mut params = GeneratorParams::new(n, config.tasks_for(n), config.density);
            params.max_capable = config.max_capable;
            let run = generate_random_scenario(&params, seed)
                .map_err(|e| e.to_string())
                .and_then(|s| measured_run(&s, &config.negotiation(seed)).map_err(|e| e.to_string()));
            (n, seed, run.map(|(_, m)| m))
        })
        .collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (n, seed, r) in results {
        match r {
            Ok(m) => rows.push(m),
            Err(e) => errors.push((n, seed, e)),
        }
    }
    let mut by_point: BTreeMap<usize, Vec<&Metrics>> = BTreeMap::new();
    for r in &rows {
        by_point.entry(r.agents).or_default().push(r);
    }
    let points = by_point
        .into_iter()
        .map(|(agents, rs)| {
            let k = rs.len() as f64;
            let mean = |f: &dyn Fn(&Metrics) -> f64| rs.iter().map(|m| f(m)).sum::<f64>() / k;
            PointSummary {
                mode: mode_label(config.dependency_handling).to_owned(),
                agents,
                tasks: config.tasks_for(agents),
                runs: rs.len(),
                solved: rs.iter().filter(|m| m.solution_id.is_some()).count(),
                messages: mean(&|m| m.messages as f64),
                structures_sent: mean(&|m| m.structures_sent as f64),
                structures_evaluated: mean(&|m| m.structures_evaluated as f64),
                runtime_ms: mean(&|m| m.runtime_ms),
            }
        })
        .collect();
    Ok(ExperimentReport { config: config.clone(), rows, points, errors })
}

/// Paired runs of one scenario with task grouping on and off.
#[derive(Debug, Clone)]
pub struct DependencyComparison {
    pub on: Metrics,
    pub off: Metrics,
    /// Structures evaluated with grouping over those without; 1.0 means
    /// no change.
    pub evaluated_ratio: f64,
    pub message_ratio: f64,
    /// Coalitions in each agent's preferred support, summed over agents.
    pub coalitions_on: usize,
    pub coalitions_off: usize,
}

impl DependencyComparison {
    /// Relative reduction in evaluated structures.
    pub fn gain(&self) -> f64 {
        1.0 - self.evaluated_ratio
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if a == b {
        1.0
    } else if b == 0 {
        f64::INFINITY
    } else {
        a as f64 / b as f64
    }
}

fn top_support_size(plans: &[AgentPlan]) -> usize {
    plans.iter().map(|p| p.supports.first().map_or(0, |s| s.combinations.len())).sum()
}

pub fn compare_dependency_modes(scenario: &Scenario, seed: u64) -> Result<DependencyComparison, ScenarioError> {
    compare_dependency_modes_with(scenario, &NegotiationConfig { seed, ..NegotiationConfig::default() })
}

pub fn compare_dependency_modes_with(
    scenario: &Scenario,
    base: &NegotiationConfig,
) -> Result<DependencyComparison, ScenarioError> {
    let mut on_cfg = base.clone();
    on_cfg.plan.generate.dependency_handling = true;
    let mut off_cfg = base.clone();
    off_cfg.plan.generate.dependency_handling = false;
    let (_, on) = measured_run(scenario, &on_cfg)?;
    let (_, off) = measured_run(scenario, &off_cfg)?;
    let (_, on_plans) = structure_universe(scenario, &on_cfg.plan);
    let (_, off_plans) = structure_universe(scenario, &off_cfg.plan);
    Ok(DependencyComparison {
        evaluated_ratio: ratio(on.structures_evaluated, off.structures_evaluated),
        message_ratio: ratio(on.messages, off.messages),
        coalitions_on: top_support_size(&on_plans),
        coalitions_off: top_support_size(&off_plans),
        on,
        off,
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when a
/// side is constant or the lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Distinct task pairs with a declared relationship.
pub fn edge_pairs(scenario: &Scenario) -> BTreeSet<(TaskId, TaskId)> {
    scenario.relationships.iter().map(|r| task_pair(&r.a, &r.b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_generator_params() {
        let s = generate_random_scenario(&GeneratorParams::new(2, 2, 0.0), 1).unwrap();
        assert_eq!(s.agents.len(), 2);
        assert_eq!(s.tasks.len(), 2);
        assert!(s.relationships.is_empty());
        s.validate().unwrap();
    }

    #[test]
    fn generator_is_deterministic() {
        let p = GeneratorParams::new(4, 6, 0.5);
        assert_eq!(generate_random_scenario(&p, 7).unwrap().to_text(), generate_random_scenario(&p, 7).unwrap().to_text());
        assert_ne!(generate_random_scenario(&p, 7).unwrap().to_text(), generate_random_scenario(&p, 8).unwrap().to_text());
    }

    #[test]
    fn full_density_links_every_pair() {
        let s = generate_random_scenario(&GeneratorParams::new(3, 4, 1.0), 3).unwrap();
        assert_eq!(edge_pairs(&s).len(), 6);
    }

    #[test]
    fn too_many_wanted_tasks_is_a_config_error() {
        let p = GeneratorParams { wanted_per_agent: Some(5), ..GeneratorParams::new(2, 4, 0.3) };
        assert!(matches!(generate_random_scenario(&p, 0), Err(ConfigError::Generator(_))));
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn ratio_of_equal_counts_is_one() {
        assert_eq!(ratio(7, 7), 1.0);
        assert_eq!(ratio(2, 4), 0.5);
    }

    #[test]
    fn zero_repetitions_rejected() {
        let cfg = ExperimentConfig { repetitions: 0, ..ExperimentConfig::default() };
        assert!(run_experiment(&cfg).is_err());
    }
}

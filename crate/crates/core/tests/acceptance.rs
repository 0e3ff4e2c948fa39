//! Acceptance suite. Each test prints one PASS/FAIL line and fails when its
//! criterion does not hold.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use coalition_core::combination::{
    build_partitions, enumerate_supports, generate_combinations, CombinationTree, GenerateOptions, TaskScope,
    TreeOptions,
};
use coalition_core::harness::{
    brute_force_pareto, compare_dependency_modes, generate_random_scenario, run_experiment, structure_universe,
    ExperimentConfig, GeneratorParams, Metrics, ORACLE_LIMIT,
};
use coalition_core::negotiation::{run_negotiation, MessageKind, NegotiationConfig, NegotiationResult, Origin};
use coalition_core::preference::{sort_into_groups, OrdinalPreference};
use coalition_core::{AgentId, OracleError, StructureId, TaskCombination, TaskId};

use common::*;

fn check(criterion: u32, name: &str, outcome: Result<String, String>) {
    report(criterion, name, &outcome);
    if let Err(why) = outcome {
        panic!("criterion {criterion} ({name}) failed: {why}");
    }
}

fn worked_example_concludes() -> Result<String, String> {
    let scenario = worked_example();
    let allowed = ids(&["E1", "E3"]);
    let mut seen = BTreeSet::new();
    let mut configs: Vec<NegotiationConfig> = ["C1", "C2"]
        .iter()
        .map(|a| NegotiationConfig { initiator: Some(AgentId::from(*a)), ..Default::default() })
        .collect();
    configs.extend((0..8).map(|seed| NegotiationConfig { seed, ..Default::default() }));
    for cfg in configs {
        let deadline = cfg.deadline;
        let start = Instant::now();
        let outcome = run_negotiation(&scenario, cfg).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        if elapsed >= Duration::from_secs(1) {
            return Err(format!("run took {elapsed:?}"));
        }
        let Some(id) = outcome.result.solution() else {
            return Err(format!("no solution: {:?}", outcome.result));
        };
        if !allowed.contains(id) {
            return Err(format!("concluded on {id}"));
        }
        if outcome.rounds >= deadline || outcome.pressure {
            return Err(format!("concluded under deadline pressure after {} rounds", outcome.rounds));
        }
        seen.insert(format!("{id} (initiator {})", outcome.initiator));
    }
    Ok(seen.into_iter().collect::<Vec<_>>().join(", "))
}

#[test]
fn criterion_1_worked_example_golden() {
    check(1, "worked example concludes on a Pareto optimum", worked_example_concludes());
}

fn oracle_on_fixture() -> Result<String, String> {
    let scenario = worked_example();
    let frontier = brute_force_pareto(&scenario, &NegotiationConfig::default().plan).map_err(|e| e.to_string())?;
    let expected = ids(&["E1", "E3", "E6"]);
    let got: BTreeSet<StructureId> = frontier.iter().cloned().collect();
    let (registry, _) = structure_universe(&scenario, &NegotiationConfig::default().plan);
    let naive = naive_frontier(&scenario, &registry);
    if got != expected.iter().cloned().collect() {
        return Err(format!("frontier {frontier:?}"));
    }
    if naive != got {
        return Err(format!("pairwise dominance gives {naive:?}"));
    }
    Ok(format!("{frontier:?}"))
}

#[test]
fn criterion_2_oracle_frontier() {
    check(2, "oracle frontier on the worked example", oracle_on_fixture());
}

fn support_extraction() -> Result<String, String> {
    let scenario = worked_example();
    let c1 = AgentId::from("C1");
    let opts = GenerateOptions { scope: TaskScope::Capable, ..Default::default() };
    let combos = generate_combinations(&scenario, &c1, &opts);
    let multi: Vec<TaskCombination> = combos.into_iter().filter(|c| !c.is_singleton()).collect();
    let partitions = build_partitions(&multi);
    let mut tree = CombinationTree::build(&scenario, &partitions, TreeOptions::default());
    let task = |s: &str| TaskId::from(s);
    let s3: Vec<Vec<TaskId>> = vec![vec![task("T1"), task("T2"), task("T3")], vec![task("T5"), task("T6")]];
    let paths = tree.positive_sets();
    let path = paths
        .iter()
        .find(|p| p.iter().map(|c| c.tasks.clone()).collect::<Vec<_>>() == s3)
        .ok_or_else(|| "no tree path reads <{T1,T2,T3},{T5,T6}>".to_string())?;
    let path_text = coalition_core::Support::new(path.clone()).to_string();
    if path_text != "<{T1,T2,T3},{T5,T6}>" {
        return Err(format!("path reads {path_text}"));
    }
    let wanted = [TaskCombination::singleton(task("T4")), TaskCombination::singleton(task("T7"))];
    let supports = enumerate_supports(&scenario, &mut tree, &wanted);
    let texts: Vec<String> = supports.iter().map(|s| s.to_string()).collect();
    let expected = "<{T1,T2,T3},{T5,T6},{T4},{T7}>";
    if !texts.iter().any(|t| t == expected) {
        return Err(format!("supports {texts:?}"));
    }
    Ok(format!("{path_text} becomes {expected}"))
}

#[test]
fn criterion_3_support_extraction_golden() {
    check(3, "support extraction from the combination tree", support_extraction());
}

fn group_sorting() -> Result<String, String> {
    let scenario = worked_example();
    let (registry, _) = structure_universe(&scenario, &NegotiationConfig::default().plan);
    let all: Vec<_> = registry.iter().collect();
    let render = |agent: &str| -> Result<String, String> {
        let prefs = OrdinalPreference::of(&scenario, &AgentId::from(agent));
        let groups = sort_into_groups(&prefs, &all).map_err(|e| e.to_string())?;
        Ok(groups.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("; "))
    };
    let c1 = render("C1")?;
    let c2 = render("C2")?;
    if c1 != "G(E6); G(E3,E4); G(E2); G(E0,E1)" {
        return Err(format!("C1 groups {c1}"));
    }
    if c2 != "G(E1); G(E2,E3); G(E4); G(E5); G(E0)" {
        return Err(format!("C2 groups {c2}"));
    }
    Ok(format!("C1 {c1} | C2 {c2}"))
}

#[test]
fn criterion_4_group_sorting_golden() {
    check(4, "group sorting on the worked example", group_sorting());
}

fn dependency_ab() -> Result<String, String> {
    let start = Instant::now();
    let params = sweep_params(120, 5);
    let (mut with_multi, mut strict) = (0usize, 0usize);
    for (seed, &(n, m, d)) in params.iter().enumerate() {
        let seed = seed as u64;
        let scenario = generate_random_scenario(&GeneratorParams::new(n, m, d), seed).map_err(|e| e.to_string())?;
        let cmp = compare_dependency_modes(&scenario, seed).map_err(|e| e.to_string())?;
        let (on, off) = (cmp.on.structures_evaluated, cmp.off.structures_evaluated);
        if on > off {
            return Err(format!("seed {seed} (n={n}, m={m}, density={d:.2}): ON {on} > OFF {off}"));
        }
        let (_, plans) = structure_universe(&scenario, &NegotiationConfig::default().plan);
        if plans.iter().any(|p| p.combinations.iter().any(|c| c.len() >= 2)) {
            with_multi += 1;
            if on < off {
                strict += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(120) {
        return Err(format!("sweep took {elapsed:?}"));
    }
    let share = strict as f64 / with_multi.max(1) as f64;
    let detail = format!(
        "ON <= OFF on {} scenarios, strict on {strict}/{with_multi} ({:.0}%) with combinations, {elapsed:.1?}",
        params.len(),
        share * 100.0
    );
    if share < 0.8 {
        return Err(detail);
    }
    Ok(detail)
}

#[test]
fn criterion_5_dependency_ab_property() {
    check(5, "dependency handling never evaluates more structures", dependency_ab());
}

fn protocol_invariants() -> Result<String, String> {
    let params = sweep_params(200, 6);
    let mut solved = 0;
    for (i, &(n, m, d)) in params.iter().enumerate() {
        let seed = 10_000 + i as u64;
        let scenario = generate_random_scenario(&GeneratorParams::new(n, m, d), seed).map_err(|e| e.to_string())?;
        let cfg = NegotiationConfig { seed, ..Default::default() };
        let (outcome, registry) = run_with_registry(&scenario, cfg.clone());
        let ctx = format!("seed {seed}");
        if outcome.rounds > cfg.deadline {
            return Err(format!("{ctx}: ran past the deadline"));
        }
        let prefs: BTreeMap<AgentId, OrdinalPreference> =
            scenario.agents.iter().map(|a| (a.clone(), OrdinalPreference::of(&scenario, a))).collect();
        let rank = |a: &AgentId, id: &StructureId| prefs[a].rank(registry.get(id).expect("registered")).unwrap();

        let mut declared_out: BTreeSet<StructureId> = BTreeSet::new();
        let mut declared_combos: BTreeSet<String> = BTreeSet::new();
        let mut approvers: BTreeMap<StructureId, Vec<AgentId>> = BTreeMap::new();
        let mut own_ranks: BTreeMap<AgentId, Vec<u32>> = BTreeMap::new();
        for msg in &outcome.transcript {
            match &msg.kind {
                MessageKind::DeclareOut { structures, combinations } => {
                    for id in structures {
                        if prefs[&msg.sender].acceptable(registry.get(id).unwrap()).unwrap() {
                            return Err(format!("{ctx}: {} declared acceptable {id} out", msg.sender));
                        }
                    }
                    declared_out.extend(structures.iter().cloned());
                    declared_combos.extend(combinations.iter().cloned());
                }
                MessageKind::Propose { group, origin, signatures, .. } => {
                    for id in &group.structures {
                        let s = registry.get(id).unwrap();
                        let hits_combo = s.coalitions.iter().any(|c| declared_combos.contains(&c.assignment.id()));
                        if declared_out.contains(id) || hits_combo {
                            return Err(format!("{ctx}: {} proposed {id} after it was declared out", msg.sender));
                        }
                    }
                    if *origin == Origin::Own {
                        let r = rank(&msg.sender, &group.structures[0]);
                        own_ranks.entry(msg.sender.clone()).or_default().push(r);
                    }
                    for sig in signatures {
                        let now = sig.approvers().to_vec();
                        let before = approvers.entry(sig.structure.clone()).or_default();
                        if !now.starts_with(before) {
                            return Err(format!("{ctx}: signature of {} went from {before:?} to {now:?}", sig.structure));
                        }
                        *before = now;
                    }
                }
                MessageKind::Solution { signature, .. } => {
                    let now = signature.approvers().to_vec();
                    let before = approvers.entry(signature.structure.clone()).or_default();
                    if !now.starts_with(before) {
                        return Err(format!("{ctx}: final signature dropped approvers"));
                    }
                }
                _ => {}
            }
        }
        for (agent, ranks) in &own_ranks {
            if ranks.windows(2).any(|w| w[0] > w[1]) {
                return Err(format!("{ctx}: {agent} proposed own groups with ranks {ranks:?}"));
            }
        }
        if let NegotiationResult::Solution(id) = &outcome.result {
            solved += 1;
            for a in &scenario.agents {
                if !prefs[a].acceptable(registry.get(id).unwrap()).unwrap() {
                    return Err(format!("{ctx}: solution {id} is worse than the reference for {a}"));
                }
            }
            let signers: BTreeSet<AgentId> = outcome.signatures[id].approvers().iter().cloned().collect();
            if signers != agents(&scenario) {
                return Err(format!("{ctx}: solution {id} signed only by {signers:?}"));
            }
        }
    }
    Ok(format!("{} runs, {solved} concluded, no violations", params.len()))
}

#[test]
fn criterion_6_protocol_invariants() {
    check(6, "protocol invariants over random scenarios", protocol_invariants());
}

fn pareto_agreement() -> Result<String, String> {
    let params = sweep_params(150, 7);
    let (mut checked, mut skipped) = (0, 0);
    for (i, &(n, m, d)) in params.iter().enumerate() {
        let seed = 20_000 + i as u64;
        let scenario = generate_random_scenario(&GeneratorParams::new(n, m, d), seed).map_err(|e| e.to_string())?;
        for deps in [true, false] {
            let mut cfg = NegotiationConfig { seed, ..Default::default() };
            cfg.plan.generate.dependency_handling = deps;
            let (outcome, registry) = run_with_registry(&scenario, cfg.clone());
            let Some(id) = outcome.result.solution() else { continue };
            if outcome.pressure || registry.len() > ORACLE_LIMIT {
                skipped += 1;
                continue;
            }
            let oracle: BTreeSet<StructureId> = match brute_force_pareto(&scenario, &cfg.plan) {
                Ok(f) => f.into_iter().collect(),
                Err(OracleError::TooLarge { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.to_string()),
            };
            let frontier = naive_frontier(&scenario, &registry);
            if oracle != frontier {
                return Err(format!("seed {seed}: oracle {oracle:?} vs pairwise {frontier:?}"));
            }
            if !frontier.contains(id) {
                return Err(format!("seed {seed} deps={deps}: solution {id} outside frontier {frontier:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} solutions in the frontier, {skipped} skipped"))
}

#[test]
fn criterion_7_pareto_oracle_agreement() {
    check(7, "concluded solutions are Pareto optimal", pareto_agreement());
}

fn trends() -> Result<String, String> {
    let report = run_experiment(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    if report.points.len() != 9 {
        return Err(format!("{} points", report.points.len()));
    }
    if let Some(p) = report.points.iter().find(|p| p.runs != 10) {
        return Err(format!("n={} averaged {} runs", p.agents, p.runs));
    }
    let xs: Vec<f64> = report.points.iter().map(|p| p.agents as f64).collect();
    let msgs: Vec<f64> = report.points.iter().map(|p| p.messages).collect();
    let sent: Vec<f64> = report.points.iter().map(|p| p.structures_sent).collect();
    let (rm, rs) = (rank_correlation(&xs, &msgs), rank_correlation(&xs, &sent));
    let detail = format!("rho(messages) = {rm:.3}, rho(structures sent) = {rs:.3}");
    if rm > 0.8 && rs > 0.8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn criterion_8_trends_in_agent_count() {
    check(8, "messages and structures sent grow with the agent count", trends());
}

fn metrics_line(scenario: &coalition_core::Scenario, cfg: &NegotiationConfig) -> Result<(String, Vec<String>), String> {
    let outcome = run_negotiation(scenario, cfg.clone()).map_err(|e| e.to_string())?;
    let m = Metrics::from_outcome(scenario, &outcome, cfg.plan.generate.dependency_handling, cfg.seed, 0.0);
    Ok((outcome.transcript_text(), m.record(false)))
}

fn determinism() -> Result<String, String> {
    let mut runs = 0;
    let fixture = worked_example();
    let mut cases = vec![(fixture, NegotiationConfig::default())];
    for seed in 0..30u64 {
        let params = GeneratorParams::new(2 + (seed % 5) as usize, 3 + (seed % 6) as usize, 0.5);
        let s = generate_random_scenario(&params, seed).map_err(|e| e.to_string())?;
        let mut cfg = NegotiationConfig { seed, ..Default::default() };
        cfg.plan.generate.dependency_handling = seed % 2 == 0;
        cfg.strategy.trust = seed % 3 != 0;
        cases.push((s, cfg));
    }
    for (scenario, cfg) in &cases {
        let again = generate_random_scenario(
            &GeneratorParams::new(scenario.agents.len(), scenario.tasks.len(), 0.5),
            cfg.seed,
        );
        let a = metrics_line(scenario, cfg)?;
        let b = metrics_line(scenario, cfg)?;
        if a != b {
            return Err(format!("seed {} diverged", cfg.seed));
        }
        if let Ok(regen) = again {
            if scenario.structures.is_empty() && regen.to_text() != scenario.to_text() {
                return Err(format!("seed {} generated a different scenario", cfg.seed));
            }
        }
        runs += 1;
    }
    Ok(format!("{runs} scenario/flag combinations reproduced byte for byte"))
}

#[test]
fn criterion_9_determinism() {
    check(9, "identical inputs give identical transcripts and metrics", determinism());
}

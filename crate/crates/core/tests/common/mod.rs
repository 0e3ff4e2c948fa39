#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::Write;

use coalition_core::negotiation::{MessageKind, Negotiation, NegotiationConfig, NegotiationOutcome};
use coalition_core::preference::{OrdinalPreference, StructureRegistry};
use coalition_core::{AgentId, Scenario, StructureId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORKED_EXAMPLE: &str = include_str!("../fixtures/worked_example.scn");

pub fn worked_example() -> Scenario {
    Scenario::parse(WORKED_EXAMPLE).expect("fixture parses")
}

pub fn ids(list: &[&str]) -> Vec<StructureId> {
    list.iter().map(|s| StructureId::from(*s)).collect()
}

/// Writes straight to stderr so the line shows up even when output is
/// captured.
pub fn report(criterion: u32, name: &str, outcome: &Result<String, String>) {
    let line = match outcome {
        Ok(detail) => format!("PASS criterion {criterion} ({name}): {detail}"),
        Err(why) => format!("FAIL criterion {criterion} ({name}): {why}"),
    };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

/// Frontier by direct pairwise dominance: `a` dominates `b` when every
/// agent ranks `a` at least as well and one agent ranks it strictly better.
pub fn naive_frontier(scenario: &Scenario, registry: &StructureRegistry) -> BTreeSet<StructureId> {
    let prefs: Vec<OrdinalPreference> = scenario.agents.iter().map(|a| OrdinalPreference::of(scenario, a)).collect();
    let all: Vec<_> = registry.iter().collect();
    let ranks: Vec<Vec<u32>> = all.iter().map(|s| prefs.iter().map(|p| p.rank(s).unwrap()).collect()).collect();
    let mut out = BTreeSet::new();
    for (i, s) in all.iter().enumerate() {
        let dominated = (0..all.len()).any(|j| {
            j != i
                && ranks[j].iter().zip(&ranks[i]).all(|(x, y)| x <= y)
                && ranks[j].iter().zip(&ranks[i]).any(|(x, y)| x < y)
        });
        if !dominated {
            out.insert(s.id.clone());
        }
    }
    out
}

/// Spearman correlation with average ranks for ties.
pub fn rank_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// `(agents, tasks, density)` draws for random sweeps.
pub fn sweep_params(count: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen_range(2..=6), rng.gen_range(2..=8), rng.gen_range(0.3..=1.0))).collect()
}

/// Runs to completion and keeps the final registry next to the outcome.
pub fn run_with_registry(scenario: &Scenario, config: NegotiationConfig) -> (NegotiationOutcome, StructureRegistry) {
    let mut n = Negotiation::new(scenario, config).expect("valid scenario");
    while n.step() {}
    let registry = n.registry().clone();
    (n.into_outcome(), registry)
}

/// Every structure id carried by a proposal in the transcript.
pub fn proposed_ids(outcome: &NegotiationOutcome) -> BTreeSet<StructureId> {
    outcome
        .transcript
        .iter()
        .filter_map(|m| match &m.kind {
            MessageKind::Propose { group, .. } => Some(group.structures.clone()),
            _ => None,
        })
        .flatten()
        .collect()
}

pub fn agents(scenario: &Scenario) -> BTreeSet<AgentId> {
    scenario.agents.iter().cloned().collect()
}

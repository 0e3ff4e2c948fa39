mod common;

use std::collections::{BTreeMap, BTreeSet};

use coalition_core::preference::{
    sort_into_groups, structures_from_support, Coalition, CoalitionStructure, Comparison, OrdinalPreference, Ranking,
};
use coalition_core::{AgentId, PreferenceError, Scenario, StructureId, Support, TaskCombination, TaskId};
use proptest::prelude::*;

use common::worked_example;

fn structure(s: &Scenario, id: &str) -> CoalitionStructure {
    let d = s.declared(&StructureId::from(id)).unwrap();
    CoalitionStructure::new(d.id.clone(), d.coalitions.clone())
}

fn prefs(s: &Scenario, agent: &str) -> OrdinalPreference {
    OrdinalPreference::of(s, &AgentId::from(agent))
}

#[test]
fn fixture_comparisons() {
    let s = worked_example();
    let c1 = prefs(&s, "C1");
    let (e3, e4, e6) = (structure(&s, "E3"), structure(&s, "E4"), structure(&s, "E6"));
    assert_eq!(c1.compare(&e6, &e3), Ok(Comparison::Better));
    assert_eq!(c1.compare(&e3, &e4), Ok(Comparison::Equivalent));
    assert_eq!(c1.compare(&e3, &e3), Ok(Comparison::Equivalent));
}

#[test]
fn fixture_acceptability() {
    let s = worked_example();
    assert_eq!(prefs(&s, "C2").acceptable(&structure(&s, "E6")), Ok(false));
    assert_eq!(prefs(&s, "C1").acceptable(&structure(&s, "E5")), Ok(false));
    for a in ["C1", "C2"] {
        assert_eq!(prefs(&s, a).acceptable(&structure(&s, "E0")), Ok(true));
    }
}

#[test]
fn unranked_structure_is_reported() {
    let s = worked_example();
    let stranger = CoalitionStructure::new(StructureId::from("E99"), Vec::new());
    assert!(matches!(prefs(&s, "C1").rank(&stranger), Err(PreferenceError::Unranked { .. })));
}

#[test]
fn empty_input_gives_no_groups() {
    let s = worked_example();
    assert!(sort_into_groups(&prefs(&s, "C1"), &[]).unwrap().is_empty());
}

#[test]
fn forced_assignment() {
    let s = Scenario::parse("[tasks]\nT1\n[agents]\nA1 A2\n[capabilities]\nA1: T1\n").unwrap();
    let sup = Support::new(vec![TaskCombination::singleton(TaskId::from("T1"))]);
    let got = structures_from_support(&s, &AgentId::from("A2"), &sup, 1, Some(1)).unwrap();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0][0].to_string(), "{A1}:{T1}");
}

#[test]
fn nobody_capable_is_infeasible() {
    let s = Scenario::parse("[tasks]\nT1\nT8\n[agents]\nA1\n[capabilities]\nA1: T1\n").unwrap();
    let sup = Support::new(vec![TaskCombination::singleton(TaskId::from("T8"))]);
    let err = structures_from_support(&s, &AgentId::from("A1"), &sup, 1, None).unwrap_err();
    assert_eq!(err.combination, "{T8}");
}

#[test]
fn agent_ranking_decides_the_preferred_coalition() {
    let s = Scenario::parse(
        "[tasks]\nT1\n[agents]\nA1 A2\n[capabilities]\nA1: T1\nA2: T1\n[preferences]\nA1 agents: A2 A1\n",
    )
    .unwrap();
    let sup = Support::new(vec![TaskCombination::singleton(TaskId::from("T1"))]);
    let best = structures_from_support(&s, &AgentId::from("A1"), &sup, 1, Some(1)).unwrap();
    assert_eq!(best[0][0].to_string(), "{A2}:{T1}");
    let all = structures_from_support(&s, &AgentId::from("A1"), &sup, 2, None).unwrap();
    assert_eq!(all.len(), 3);
}

fn arbitrary_structures(count: usize) -> Vec<CoalitionStructure> {
    (0..count)
        .map(|i| {
            let task = TaskId::new(format!("T{i}"));
            let members: BTreeSet<AgentId> = [AgentId::from("A1")].into();
            CoalitionStructure::new(
                StructureId::new(format!("E{}", i + 1)),
                vec![Coalition { members, assignment: TaskCombination::singleton(task) }],
            )
        })
        .collect()
}

proptest! {
    #[test]
    fn compare_is_a_total_preorder(ranks in prop::collection::vec(0u32..6, 2..12), reference in 0u32..6) {
        let structures = arbitrary_structures(ranks.len());
        let mut table: BTreeMap<StructureId, u32> =
            structures.iter().zip(&ranks).map(|(s, r)| (s.id.clone(), *r)).collect();
        table.insert(StructureId::from("E0"), reference);
        let p = OrdinalPreference::new(AgentId::from("A1"), Ranking::Table(table), StructureId::from("E0"));
        for a in &structures {
            prop_assert_eq!(p.compare(a, a).unwrap(), Comparison::Equivalent);
            for b in &structures {
                let ab = p.compare(a, b).unwrap();
                let ba = p.compare(b, a).unwrap();
                let mirrored = match ab {
                    Comparison::Better => Comparison::Worse,
                    Comparison::Worse => Comparison::Better,
                    Comparison::Equivalent => Comparison::Equivalent,
                };
                prop_assert_eq!(ba, mirrored);
                for c in &structures {
                    if ab != Comparison::Worse && p.compare(b, c).unwrap() != Comparison::Worse {
                        prop_assert_ne!(p.compare(a, c).unwrap(), Comparison::Worse);
                    }
                }
            }
        }
        let reference_state = CoalitionStructure::new(StructureId::from("E0"), Vec::new());
        prop_assert!(p.acceptable(&reference_state).unwrap());
    }

    #[test]
    fn groups_partition_the_acceptable_structures(
        ranks in prop::collection::vec(0u32..6, 0..14),
        reference in 0u32..6,
    ) {
        let structures = arbitrary_structures(ranks.len());
        let table: BTreeMap<StructureId, u32> = structures
            .iter()
            .zip(&ranks)
            .map(|(s, r)| (s.id.clone(), *r))
            .chain([(StructureId::from("E0"), reference)])
            .collect();
        let p = OrdinalPreference::new(AgentId::from("A1"), Ranking::Table(table.clone()), StructureId::from("E0"));
        let refs: Vec<&CoalitionStructure> = structures.iter().collect();
        let groups = sort_into_groups(&p, &refs).unwrap();
        for g in &groups {
            prop_assert!(!g.structures.is_empty());
            prop_assert!(g.structures.iter().all(|id| table[id] == g.sender_rank));
        }
        prop_assert!(groups.windows(2).all(|w| w[0].sender_rank < w[1].sender_rank));
        let flat: BTreeSet<StructureId> = groups.iter().flat_map(|g| g.structures.clone()).collect();
        let acceptable: BTreeSet<StructureId> =
            structures.iter().filter(|s| table[&s.id] <= reference).map(|s| s.id.clone()).collect();
        prop_assert_eq!(flat, acceptable);
    }

    #[test]
    fn hashed_ranks_are_stable_and_bounded(salt in any::<u64>(), levels in 1u32..9) {
        let p = OrdinalPreference::new(AgentId::from("A1"), Ranking::Hashed { salt, levels }, StructureId::from("E0"));
        for s in arbitrary_structures(6) {
            let r = p.rank(&s).unwrap();
            prop_assert!(r < levels);
            let mut renamed = s.clone();
            renamed.id = StructureId::from("E77");
            prop_assert_eq!(p.rank(&renamed).unwrap(), r);
        }
    }

    #[test]
    fn structures_reconstruct_their_support(seed in any::<u64>(), n in 2usize..=4, m in 2usize..=6) {
        use coalition_core::harness::{generate_random_scenario, GeneratorParams};
        use coalition_core::preference::{plan_agent, PlanOptions};
        let s = generate_random_scenario(&GeneratorParams::new(n, m, 0.6), seed).unwrap();
        for agent in &s.agents {
            let plan = plan_agent(&s, agent, &PlanOptions::default());
            for sup in &plan.supports {
                let Ok(list) = structures_from_support(&s, agent, sup, 2, Some(4)) else { continue };
                for coalitions in list {
                    prop_assert_eq!(coalitions.len(), sup.combinations.len());
                    let rebuilt = Support::new(coalitions.iter().map(|c| c.assignment.clone()).collect());
                    prop_assert_eq!(&rebuilt, sup);
                    for c in &coalitions {
                        prop_assert!(!c.members.is_empty());
                        prop_assert!(c.members.iter().all(|a| c.assignment.tasks.iter().any(|t| s.capabilities.can(a, t))));
                    }
                }
            }
        }
    }
}

use std::collections::{BTreeMap, BTreeSet};

use crate::error::PreferenceError;
use crate::ids::{AgentId, StructureId};
use crate::preference::{sort_into_groups, AgentPlan, CoalitionStructure, Group, OrdinalPreference, Signature, StructureRegistry};

use super::message::Origin;

/// Tunable negotiation behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    /// An incoming structure is admitted when it ranks no worse than the
    /// k-th of the agent's remaining own groups. 1 is the strictest.
    pub block_threshold: usize,
    /// Broadcast unacceptable structures and combinations.
    pub trust: bool,
    /// The last agent of a chain keeps conceding instead of concluding
    /// while it still has own groups to offer.
    pub stalling: bool,
    /// Below this fraction of remaining rounds any acceptable structure
    /// is admitted.
    pub relax_below: f64,
    /// Below this fraction of remaining rounds an agent may conclude any
    /// structure that everyone else already signed.
    pub conclude_below: f64,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy { block_threshold: 1, trust: true, stalling: false, relax_below: 0.25, conclude_below: 0.10 }
    }
}

/// Read-only view of the shared negotiation state during one turn.
pub struct TurnView<'a> {
    pub registry: &'a StructureRegistry,
    pub board: &'a BTreeMap<StructureId, Signature>,
    /// All agents in id order; forwarding walks this ring.
    pub ring: &'a [AgentId],
    pub round: u64,
    pub deadline: u64,
    pub strategy: &'a Strategy,
}

impl TurnView<'_> {
    fn remaining(&self) -> f64 {
        if self.deadline == 0 {
            return 0.0;
        }
        self.deadline.saturating_sub(self.round) as f64 / self.deadline as f64
    }

    pub fn relaxed(&self) -> bool {
        self.remaining() < self.strategy.relax_below
    }

    pub fn closing(&self) -> bool {
        self.remaining() < self.strategy.conclude_below
    }

    fn next_after(&self, me: &AgentId, visited: &BTreeSet<AgentId>) -> Option<AgentId> {
        let pos = self.ring.iter().position(|a| a == me).unwrap_or(0);
        (1..self.ring.len()).map(|k| &self.ring[(pos + k) % self.ring.len()]).find(|a| !visited.contains(*a)).cloned()
    }

    fn covers_all(&self, agents: &BTreeSet<AgentId>) -> bool {
        self.ring.iter().all(|a| agents.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incoming {
    pub sender: AgentId,
    pub group: Group,
    pub origin: Origin,
    pub visited: BTreeSet<AgentId>,
    /// Round in which the proposal was sent.
    pub sent_round: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Pass admitted structures down the chain.
    Forward { group: Group, to: AgentId, visited: BTreeSet<AgentId> },
    /// Concede the agent's next own group.
    Propose { group: Group, to: AgentId },
    Conclude { structure: StructureId },
    /// Nothing left to offer.
    Pass { to: AgentId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub structures: Vec<StructureId>,
    pub salvage: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub reject: Option<Rejection>,
    pub action: Action,
    /// Structures the agent signs this turn.
    pub sign: Vec<StructureId>,
    /// The decision relied on deadline pressure.
    pub pressure: bool,
    /// Incoming structures the sender proposed despite a declaration.
    pub violations: Vec<StructureId>,
}

/// One negotiating agent.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: AgentId,
    pub prefs: OrdinalPreference,
    ranks: BTreeMap<StructureId, u32>,
    pub reference_rank: u32,
    /// Own acceptable groups, best first.
    pub groups: Vec<Group>,
    /// Index of the next own group to concede.
    pub next_group: usize,
    pub blocked: BTreeSet<StructureId>,
    /// Structures and combinations this agent finds unacceptable.
    pub out_set: BTreeSet<StructureId>,
    pub out_combinations: BTreeSet<String>,
    /// Round of the agent's own out declaration, if it made one.
    pub declared_round: Option<u64>,
    /// Declarations received from the others.
    pub known_out: BTreeSet<StructureId>,
    pub known_out_combinations: BTreeSet<String>,
    pub knowledge: BTreeMap<StructureId, Signature>,
    /// Own groups sent so far, in order.
    pub proposed: Vec<Group>,
    pub plan: Option<AgentPlan>,
}

impl AgentState {
    pub fn new(
        prefs: OrdinalPreference,
        registry: &StructureRegistry,
        plan: Option<AgentPlan>,
    ) -> Result<Self, PreferenceError> {
        let mut ranks = BTreeMap::new();
        for s in registry.iter() {
            ranks.insert(s.id.clone(), prefs.rank(s)?);
        }
        let reference_rank = prefs.reference_rank()?;
        let all: Vec<&CoalitionStructure> = registry.iter().collect();
        let groups = sort_into_groups(&prefs, &all)?;
        let out_set: BTreeSet<StructureId> =
            ranks.iter().filter(|(_, r)| **r > reference_rank).map(|(id, _)| id.clone()).collect();
        // Multi-task combinations that only ever occur in unacceptable structures.
        let mut verdict: BTreeMap<String, bool> = BTreeMap::new();
        for s in registry.iter() {
            let bad = out_set.contains(&s.id);
            for c in s.coalitions.iter().filter(|c| c.assignment.len() >= 2) {
                let e = verdict.entry(c.assignment.id()).or_insert(true);
                *e &= bad;
            }
        }
        let out_combinations = verdict.into_iter().filter(|(_, bad)| *bad).map(|(c, _)| c).collect();
        Ok(AgentState {
            id: prefs.owner.clone(),
            prefs,
            ranks,
            reference_rank,
            groups,
            next_group: 0,
            blocked: BTreeSet::new(),
            out_set,
            out_combinations,
            declared_round: None,
            known_out: BTreeSet::new(),
            known_out_combinations: BTreeSet::new(),
            knowledge: BTreeMap::new(),
            proposed: Vec::new(),
            plan,
        })
    }

    pub fn rank_of(&self, id: &StructureId) -> Option<u32> {
        self.ranks.get(id).copied()
    }

    pub fn acceptable(&self, id: &StructureId) -> bool {
        self.rank_of(id).is_some_and(|r| r <= self.reference_rank)
    }

    fn excluded(&self, id: &StructureId, registry: &StructureRegistry) -> bool {
        if self.known_out.contains(id) || self.out_set.contains(id) {
            return true;
        }
        if self.known_out_combinations.is_empty() {
            return false;
        }
        registry.get(id).is_some_and(|s| {
            s.coalitions.iter().any(|c| self.known_out_combinations.contains(&c.assignment.id()))
        })
    }

    fn filtered(&self, g: &Group, registry: &StructureRegistry) -> Group {
        Group {
            sender: g.sender.clone(),
            sender_rank: g.sender_rank,
            structures: g.structures.iter().filter(|s| !self.excluded(s, registry)).cloned().collect(),
        }
    }

    /// Own groups not conceded yet, without declared-out structures.
    pub fn pending(&self, registry: &StructureRegistry) -> Vec<Group> {
        self.groups[self.next_group.min(self.groups.len())..]
            .iter()
            .map(|g| self.filtered(g, registry))
            .filter(|g| !g.structures.is_empty())
            .collect()
    }

    /// Worst rank the agent currently admits without deadline pressure.
    pub fn aspiration(&self, view: &TurnView<'_>) -> u32 {
        let k = view.strategy.block_threshold.max(1);
        self.pending(view.registry).get(k - 1).map_or(self.reference_rank, |g| g.sender_rank)
    }

    /// Unacceptable structures and combinations to broadcast.
    pub fn declare_out(&mut self, round: u64) -> (Vec<StructureId>, Vec<String>) {
        self.declared_round = Some(round);
        (self.out_set.iter().cloned().collect(), self.out_combinations.iter().cloned().collect())
    }

    pub fn receive_out(&mut self, structures: &[StructureId], combinations: &[String]) {
        self.known_out.extend(structures.iter().cloned());
        self.known_out_combinations.extend(combinations.iter().cloned());
    }

    fn salvage(&self, rejected: &[StructureId], registry: &StructureRegistry) -> Option<String> {
        for id in rejected {
            let Some(s) = registry.get(id) else { continue };
            for c in &s.coalitions {
                let reusable = registry.iter().any(|other| {
                    other.id != *id && self.acceptable(&other.id) && other.coalitions.contains(c)
                });
                if reusable {
                    return Some(format!("{id} {c}"));
                }
            }
        }
        None
    }

    /// Decides what to do with the turn. `incoming` is `None` when the
    /// agent opens the negotiation, resumes after a restart or receives a
    /// pass.
    pub fn handle_proposal(&mut self, view: &TurnView<'_>, incoming: Option<&Incoming>) -> Turn {
        let mut reject = None;
        let mut violations = Vec::new();
        let mut cands: BTreeSet<StructureId> = self.blocked.clone();
        let mut incoming_set = BTreeSet::new();
        if let Some(inc) = incoming {
            let mut accepted = Vec::new();
            for id in &inc.group.structures {
                let sig = view.board.get(id).cloned().unwrap_or_else(|| Signature::new(id.clone()));
                self.knowledge.insert(id.clone(), sig);
                incoming_set.insert(id.clone());
                let told = self.declared_round.is_some_and(|r| r < inc.sent_round);
                if told && self.out_set.contains(id) {
                    violations.push(id.clone());
                }
                if self.acceptable(id) {
                    accepted.push(id.clone());
                }
            }
            if accepted.is_empty() {
                reject = Some(Rejection {
                    structures: inc.group.structures.clone(),
                    salvage: self.salvage(&inc.group.structures, view.registry),
                });
            }
            cands.extend(accepted);
        }
        cands.retain(|id| !self.excluded(id, view.registry));

        let strict = self.aspiration(view);
        let limit = if view.relaxed() { self.reference_rank.max(strict) } else { strict };
        let admissible: Vec<(u32, StructureId)> = cands
            .iter()
            .filter_map(|id| self.rank_of(id).map(|r| (r, id.clone())))
            .filter(|(r, _)| *r <= limit)
            .collect();

        if let Some(best) = admissible.iter().map(|(r, _)| *r).min() {
            let held: Vec<StructureId> =
                admissible.iter().filter(|(r, _)| *r == best).map(|(_, id)| id.clone()).collect();
            let pressure = best > strict;
            self.blocked = cands.iter().filter(|id| !held.contains(id)).cloned().collect();
            let mut visited: BTreeSet<AgentId> = match incoming {
                Some(inc) if held.iter().all(|id| incoming_set.contains(id)) => inc.visited.clone(),
                _ => BTreeSet::new(),
            };
            visited.insert(self.id.clone());
            if view.covers_all(&visited) {
                if !(view.strategy.stalling && !self.pending(view.registry).is_empty()) {
                    let structure = held[0].clone();
                    return Turn { reject, action: Action::Conclude { structure }, sign: held, pressure, violations };
                }
                self.blocked.extend(held);
            } else {
                let to = view.next_after(&self.id, &visited).expect("some agent not visited");
                let group = Group { sender: self.id.clone(), sender_rank: best, structures: held.clone() };
                return Turn { reject, action: Action::Forward { group, to, visited }, sign: held, pressure, violations };
            }
        } else {
            self.blocked = cands.clone();
        }

        if view.closing() {
            let closable = cands
                .iter()
                .filter(|id| {
                    let mut signers: BTreeSet<AgentId> =
                        view.board.get(*id).map(|s| s.approvers().iter().cloned().collect()).unwrap_or_default();
                    signers.insert(self.id.clone());
                    view.covers_all(&signers)
                })
                .filter_map(|id| self.rank_of(id).map(|r| (r, id.clone())))
                .min();
            if let Some((_, structure)) = closable {
                self.blocked.remove(&structure);
                return Turn {
                    reject,
                    action: Action::Conclude { structure: structure.clone() },
                    sign: vec![structure],
                    pressure: true,
                    violations,
                };
            }
        }

        while self.next_group < self.groups.len() {
            let g = self.filtered(&self.groups[self.next_group], view.registry);
            self.next_group += 1;
            if g.structures.is_empty() {
                continue;
            }
            self.proposed.push(g.clone());
            let sign = g.structures.clone();
            let solo: BTreeSet<AgentId> = [self.id.clone()].into();
            let action = match view.next_after(&self.id, &solo) {
                None => Action::Conclude { structure: g.structures[0].clone() },
                Some(to) => Action::Propose { group: g, to },
            };
            return Turn { reject, action, sign, pressure: false, violations };
        }

        let solo: BTreeSet<AgentId> = [self.id.clone()].into();
        let to = view.next_after(&self.id, &solo).unwrap_or_else(|| self.id.clone());
        Turn { reject, action: Action::Pass { to }, sign: Vec::new(), pressure: false, violations }
    }
}

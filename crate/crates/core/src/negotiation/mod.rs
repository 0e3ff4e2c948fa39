//! Concession-based negotiation over coalition structures.
//!
//! A single turn token travels between agents. The holder either forwards
//! structures it admits to the next agent that has not signed them, concedes
//! its next own group, or concludes once every agent signed a structure.

mod agent;
mod message;
mod want;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use agent::{Action, AgentState, Incoming, Rejection, Strategy, Turn, TurnView};
pub use message::{transcript_text, MessageKind, NegotiationMessage, Origin};
pub use want::{WantEntry, WantVector};

use crate::combination::{prune_combination, PruneOutcome, TaskCombination, TaskScope};
use crate::error::ScenarioError;
use crate::ids::{AgentId, StructureId, TaskId};
use crate::preference::{build_universe, OrdinalPreference, PlanOptions, Signature, StructureRegistry};
use crate::scenario::{Context, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct NegotiationConfig {
    pub strategy: Strategy,
    /// Round budget; a round is one hand-over of the turn.
    pub deadline: u64,
    /// Picks the initiator when none is given.
    pub seed: u64,
    pub initiator: Option<AgentId>,
    pub plan: PlanOptions,
    /// Agents that never answer the task request.
    pub unresponsive: BTreeSet<AgentId>,
}

impl Default for NegotiationConfig {
    fn default() -> Self {
        NegotiationConfig {
            strategy: Strategy::default(),
            deadline: 1000,
            seed: 0,
            initiator: None,
            plan: PlanOptions::default(),
            unresponsive: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    Deadline,
    /// Every agent passed in a row.
    Exhaustion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NegotiationResult {
    Solution(StructureId),
    Failure(FailureReason),
}

impl NegotiationResult {
    pub fn solution(&self) -> Option<&StructureId> {
        match self {
            NegotiationResult::Solution(id) => Some(id),
            NegotiationResult::Failure(_) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NegotiationResult::Solution(_) => "solution",
            NegotiationResult::Failure(FailureReason::Deadline) => "deadline",
            NegotiationResult::Failure(FailureReason::Exhaustion) => "exhaustion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Timeout { agent: AgentId },
    Infeasible { agent: AgentId, combination: String },
    Restart { round: u64, holder: AgentId },
    ProtocolViolation { agent: AgentId, structure: StructureId },
    UnknownPrune { agent: AgentId, combination: String },
}

#[derive(Debug, Clone)]
pub struct NegotiationOutcome {
    pub result: NegotiationResult,
    pub rounds: u64,
    pub transcript: Vec<NegotiationMessage>,
    /// Some decision relied on the deadline: relaxed admission or an
    /// early conclusion.
    pub pressure: bool,
    pub events: Vec<Event>,
    pub initiator: AgentId,
    pub signatures: BTreeMap<StructureId, Signature>,
    pub structures_evaluated: usize,
}

impl NegotiationOutcome {
    pub fn transcript_text(&self) -> String {
        transcript_text(&self.transcript)
    }
}

/// Messages and wants of the opening phase.
#[derive(Debug, Clone)]
pub struct Initiation {
    pub initiator: AgentId,
    pub messages: Vec<NegotiationMessage>,
    pub wants: Vec<WantVector>,
    /// Every task somebody announced, in id order.
    pub pool: Vec<TaskId>,
    pub events: Vec<Event>,
}

pub fn initiate(scenario: &Scenario, initiator: &AgentId, unresponsive: &BTreeSet<AgentId>) -> Initiation {
    let mut ring = scenario.agents.clone();
    ring.sort();
    let mut messages = Vec::new();
    let mut events = Vec::new();
    let mut wants = vec![WantVector::derive(scenario, initiator)];
    let others: Vec<&AgentId> = ring.iter().filter(|a| *a != initiator).collect();
    for a in &others {
        messages.push(NegotiationMessage {
            round: 0,
            sender: initiator.clone(),
            recipient: (*a).clone(),
            kind: MessageKind::RequestTasks,
        });
    }
    for a in others {
        if unresponsive.contains(a) {
            events.push(Event::Timeout { agent: a.clone() });
            continue;
        }
        let w = WantVector::derive(scenario, a);
        messages.push(NegotiationMessage {
            round: 0,
            sender: a.clone(),
            recipient: initiator.clone(),
            kind: MessageKind::Want(w.clone()),
        });
        wants.push(w);
    }
    let executable: BTreeSet<TaskId> = scenario.executable_tasks().into_iter().collect();
    let pool: BTreeSet<TaskId> = wants.iter().flat_map(|w| w.tasks().cloned()).filter(|t| executable.contains(t)).collect();
    Initiation { initiator: initiator.clone(), messages, wants, pool: pool.into_iter().collect(), events }
}

/// Initiator chosen by `seed` among the agents in id order.
pub fn seeded_initiator(scenario: &Scenario, seed: u64) -> Option<AgentId> {
    let mut ring = scenario.agents.clone();
    ring.sort();
    if ring.is_empty() {
        return None;
    }
    let i = ChaCha8Rng::seed_from_u64(seed).gen_range(0..ring.len());
    Some(ring[i].clone())
}

/// Step-wise negotiation engine over a FIFO message queue.
pub struct Negotiation {
    scenario: Scenario,
    config: NegotiationConfig,
    context: Context,
    registry: StructureRegistry,
    agents: BTreeMap<AgentId, AgentState>,
    ring: Vec<AgentId>,
    board: BTreeMap<StructureId, Signature>,
    queue: VecDeque<NegotiationMessage>,
    transcript: Vec<NegotiationMessage>,
    events: Vec<Event>,
    round: u64,
    pressure: bool,
    passes: usize,
    result: Option<NegotiationResult>,
    initiator: AgentId,
    /// Agent that takes a turn without an incoming message.
    opening: Option<AgentId>,
}

impl Negotiation {
    pub fn new(scenario: &Scenario, config: NegotiationConfig) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let mut ring = scenario.agents.clone();
        ring.sort();
        let initiator = match &config.initiator {
            Some(a) if ring.contains(a) => a.clone(),
            Some(a) => return Err(ScenarioError::UnknownAgent(a.clone())),
            None => seeded_initiator(scenario, config.seed).expect("validated scenario has agents"),
        };
        let init = initiate(scenario, &initiator, &config.unresponsive);
        let mut plan = config.plan.clone();
        plan.generate.scope = TaskScope::Pool(init.pool.clone());
        let (registry, plans) = build_universe(scenario, &plan);
        let mut events = init.events;
        let mut agents = BTreeMap::new();
        let mut plans: BTreeMap<AgentId, _> = plans.into_iter().map(|p| (p.agent.clone(), p)).collect();
        for a in &ring {
            let plan = plans.remove(a);
            if let Some(p) = &plan {
                events.extend(
                    p.infeasible.iter().map(|e| Event::Infeasible { agent: a.clone(), combination: e.combination.clone() }),
                );
            }
            let state = AgentState::new(OrdinalPreference::of(scenario, a), &registry, plan)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            agents.insert(a.clone(), state);
        }
        Ok(Negotiation {
            scenario: scenario.clone(),
            context: scenario.context.clone(),
            registry,
            agents,
            ring,
            board: BTreeMap::new(),
            queue: VecDeque::new(),
            transcript: init.messages,
            events,
            round: 0,
            pressure: false,
            passes: 0,
            result: None,
            opening: Some(initiator.clone()),
            initiator,
            config,
        })
    }

    pub fn registry(&self) -> &StructureRegistry {
        &self.registry
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentState> {
        self.agents.get(id)
    }

    pub fn initiator(&self) -> &AgentId {
        &self.initiator
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn transcript(&self) -> &[NegotiationMessage] {
        &self.transcript
    }

    pub fn board(&self) -> &BTreeMap<StructureId, Signature> {
        &self.board
    }

    pub fn result(&self) -> Option<&NegotiationResult> {
        self.result.as_ref()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Replaces the frozen context. A different context aborts the running
    /// chain: the structures in flight are held by their recipient, who
    /// then restarts with a fresh turn.
    pub fn change_context(&mut self, context: Context) {
        if context == self.context || self.result.is_some() {
            return;
        }
        self.context = context;
        let mut holder = self.opening.take();
        let mut in_flight = Vec::new();
        self.queue.retain(|m| {
            if !m.kind.carries_turn() {
                return true;
            }
            if holder.is_none() {
                holder = Some(m.recipient.clone());
            }
            if let MessageKind::Propose { group, .. } = &m.kind {
                in_flight.extend(group.structures.iter().cloned());
            }
            false
        });
        let holder = holder.unwrap_or_else(|| self.initiator.clone());
        if let Some(state) = self.agents.get_mut(&holder) {
            let keep: Vec<StructureId> = in_flight.into_iter().filter(|id| state.acceptable(id)).collect();
            state.blocked.extend(keep);
        }
        self.events.push(Event::Restart { round: self.round, holder: holder.clone() });
        self.opening = Some(holder);
    }

    /// Delivers one message (or runs the opening turn). Returns false once
    /// the negotiation is over.
    pub fn step(&mut self) -> bool {
        if self.result.is_some() {
            return false;
        }
        if let Some(a) = self.opening.take() {
            self.turn(&a, None);
            return self.result.is_none();
        }
        let Some(msg) = self.queue.pop_front() else {
            self.result = Some(NegotiationResult::Failure(FailureReason::Exhaustion));
            return false;
        };
        if msg.kind.carries_turn() {
            self.round += 1;
            if self.round > self.config.deadline {
                self.round = self.config.deadline;
                self.result = Some(NegotiationResult::Failure(FailureReason::Deadline));
                return false;
            }
        }
        match msg.kind {
            MessageKind::DeclareOut { structures, combinations } => {
                self.receive_out(&msg.recipient, &structures, &combinations);
            }
            MessageKind::Propose { group, origin, visited, .. } => {
                self.passes = 0;
                let inc = Incoming { sender: msg.sender, group, origin, visited, sent_round: msg.round };
                self.turn(&msg.recipient, Some(inc));
            }
            MessageKind::Reject { yields_turn: true, .. } => {
                self.passes += 1;
                if self.passes >= self.ring.len() {
                    self.result = Some(NegotiationResult::Failure(FailureReason::Exhaustion));
                    return false;
                }
                self.turn(&msg.recipient, None);
            }
            _ => {}
        }
        self.result.is_none()
    }

    pub fn run(mut self) -> NegotiationOutcome {
        while self.step() {}
        self.into_outcome()
    }

    pub fn into_outcome(self) -> NegotiationOutcome {
        NegotiationOutcome {
            result: self.result.unwrap_or(NegotiationResult::Failure(FailureReason::Deadline)),
            rounds: self.round,
            transcript: self.transcript,
            pressure: self.pressure,
            events: self.events,
            initiator: self.initiator,
            signatures: self.board,
            structures_evaluated: self.registry.len(),
        }
    }

    fn receive_out(&mut self, agent: &AgentId, structures: &[StructureId], combinations: &[String]) {
        let Some(state) = self.agents.get_mut(agent) else { return };
        state.receive_out(structures, combinations);
        if let Some(plan) = state.plan.as_mut() {
            for c in combinations {
                let combo = TaskCombination::unscored(c.split('+').map(TaskId::from));
                let outcome = prune_combination(&self.scenario, &mut plan.partitions, &mut plan.tree, &combo);
                if outcome == PruneOutcome::Unknown {
                    self.events.push(Event::UnknownPrune { agent: agent.clone(), combination: c.clone() });
                }
            }
        }
    }

    fn send(&mut self, sender: &AgentId, recipient: &AgentId, kind: MessageKind) {
        let msg = NegotiationMessage { round: self.round, sender: sender.clone(), recipient: recipient.clone(), kind };
        self.transcript.push(msg.clone());
        self.queue.push_back(msg);
    }

    fn broadcast(&mut self, sender: &AgentId, kind: MessageKind) {
        for r in self.ring.clone() {
            if &r != sender {
                self.send(sender, &r, kind.clone());
            }
        }
    }

    fn signatures(&self, ids: &[StructureId]) -> Vec<Signature> {
        ids.iter().filter_map(|id| self.board.get(id).cloned()).collect()
    }

    fn turn(&mut self, id: &AgentId, incoming: Option<Incoming>) {
        let trust = self.config.strategy.trust;
        let round = self.round;
        let declaration = match self.agents.get_mut(id) {
            Some(state) if trust && state.declared_round.is_none() => Some(state.declare_out(round)),
            Some(_) => None,
            None => return,
        };
        if let Some((structures, combinations)) = declaration {
            if !structures.is_empty() || !combinations.is_empty() {
                self.broadcast(id, MessageKind::DeclareOut { structures, combinations });
            }
        }
        let turn = {
            let view = TurnView {
                registry: &self.registry,
                board: &self.board,
                ring: &self.ring,
                round: self.round,
                deadline: self.config.deadline,
                strategy: &self.config.strategy,
            };
            let state = self.agents.get_mut(id).expect("known agent");
            state.handle_proposal(&view, incoming.as_ref())
        };
        for s in &turn.violations {
            self.events.push(Event::ProtocolViolation { agent: id.clone(), structure: s.clone() });
        }
        if let (Some(rej), Some(inc)) = (turn.reject, &incoming) {
            self.send(
                id,
                &inc.sender,
                MessageKind::Reject { structures: rej.structures, yields_turn: false, salvage: rej.salvage },
            );
        }
        for s in &turn.sign {
            self.board.entry(s.clone()).or_insert_with(|| Signature::new(s.clone())).approve(id);
        }
        self.pressure |= turn.pressure;
        match turn.action {
            Action::Forward { group, to, visited } => {
                let signatures = self.signatures(&group.structures);
                self.send(id, &to, MessageKind::Propose { group, origin: Origin::Forward, visited, signatures });
            }
            Action::Propose { group, to } => {
                let signatures = self.signatures(&group.structures);
                let visited = [id.clone()].into();
                self.send(id, &to, MessageKind::Propose { group, origin: Origin::Own, visited, signatures });
            }
            Action::Conclude { structure } => {
                let signature = self.board.get(&structure).cloned().unwrap_or_else(|| Signature::new(structure.clone()));
                self.broadcast(id, MessageKind::Solution { structure: structure.clone(), signature });
                self.result = Some(NegotiationResult::Solution(structure));
            }
            Action::Pass { to } => {
                self.send(id, &to, MessageKind::Reject { structures: Vec::new(), yields_turn: true, salvage: None });
            }
        }
    }
}

pub fn run_negotiation(scenario: &Scenario, config: NegotiationConfig) -> Result<NegotiationOutcome, ScenarioError> {
    Ok(Negotiation::new(scenario, config)?.run())
}

use std::collections::BTreeSet;
use std::fmt;

use super::want::WantVector;
use crate::ids::{AgentId, StructureId};
use crate::preference::{Group, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// One of the sender's own groups.
    Own,
    /// Structures the sender admitted from an earlier proposal.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageKind {
    RequestTasks,
    Want(WantVector),
    Propose {
        group: Group,
        origin: Origin,
        /// Agents that signed every structure of the group along this chain.
        visited: BTreeSet<AgentId>,
        signatures: Vec<Signature>,
    },
    /// `yields_turn` marks a pass: the sender had nothing to offer and hands
    /// the turn over.
    Reject { structures: Vec<StructureId>, yields_turn: bool, salvage: Option<String> },
    DeclareOut { structures: Vec<StructureId>, combinations: Vec<String> },
    Solution { structure: StructureId, signature: Signature },
}

impl MessageKind {
    pub fn label(&self) -> &'static str {
        match self {
            MessageKind::RequestTasks => "REQUEST",
            MessageKind::Want(_) => "WANT",
            MessageKind::Propose { .. } => "PROPOSE",
            MessageKind::Reject { yields_turn: true, .. } => "PASS",
            MessageKind::Reject { .. } => "REJECT",
            MessageKind::DeclareOut { .. } => "OUT",
            MessageKind::Solution { .. } => "SOLUTION",
        }
    }

    /// Messages that hand the turn to their recipient.
    pub fn carries_turn(&self) -> bool {
        matches!(self, MessageKind::Propose { .. } | MessageKind::Reject { yields_turn: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegotiationMessage {
    pub round: u64,
    pub sender: AgentId,
    pub recipient: AgentId,
    pub kind: MessageKind,
}

fn ids(list: &[StructureId]) -> String {
    list.iter().map(StructureId::as_str).collect::<Vec<_>>().join(",")
}

impl fmt::Display for NegotiationMessage {
    /// `round KIND sender recipient ids signatures`, tab separated.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (body, sigs) = match &self.kind {
            MessageKind::RequestTasks => (String::new(), String::new()),
            MessageKind::Want(w) => (w.to_string(), String::new()),
            MessageKind::Propose { group, signatures, .. } => (
                ids(&group.structures),
                signatures.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
            ),
            MessageKind::Reject { structures, salvage, .. } => {
                (ids(structures), salvage.clone().map(|s| format!("salvage {s}")).unwrap_or_default())
            }
            MessageKind::DeclareOut { structures, combinations } => {
                let mut all: Vec<String> = structures.iter().map(|s| s.to_string()).collect();
                all.extend(combinations.iter().cloned());
                (all.join(","), String::new())
            }
            MessageKind::Solution { structure, signature } => (structure.to_string(), signature.to_string()),
        };
        write!(f, "{}\t{}\t{}\t{}\t{}\t{}", self.round, self.kind.label(), self.sender, self.recipient, body, sigs)
    }
}

pub fn transcript_text(messages: &[NegotiationMessage]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(&m.to_string());
        out.push('\n');
    }
    out
}

use std::fmt;

use crate::ids::{AgentId, TaskId};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WantEntry {
    /// `None` for tasks the agent can take but has no demand for.
    pub slot: Option<u32>,
    /// Alternatives; any one of them satisfies the entry.
    pub tasks: Vec<TaskId>,
    /// The agent whose resources the entry depends on.
    pub condition: Option<AgentId>,
}

/// Prioritized, possibly conditional task demands announced at initiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WantVector {
    pub owner: AgentId,
    pub entries: Vec<WantEntry>,
}

impl WantVector {
    /// Built from the agent's priority tiers. Tasks it cannot do alone get
    /// their own entry conditioned on the preferred capable agent; capable
    /// but unlisted tasks close the vector without a slot.
    pub fn derive(scenario: &Scenario, agent: &AgentId) -> Self {
        let prefs = scenario.preferences_of(agent);
        let caps = &scenario.capabilities;
        let mut entries = Vec::new();
        let mut slot = 0;
        let mut listed = Vec::new();
        for tier in &prefs.priority {
            let mut own = Vec::new();
            let mut conditional = Vec::new();
            for t in tier {
                listed.push(t.clone());
                let capable = caps.capable_agents(t);
                if capable.contains(agent) {
                    own.push(t.clone());
                } else if !capable.is_empty() {
                    let helper = prefs
                        .agent_ranking
                        .iter()
                        .find(|a| capable.contains(*a))
                        .or_else(|| capable.iter().next())
                        .cloned();
                    conditional.push((t.clone(), helper));
                }
            }
            if !own.is_empty() {
                slot += 1;
                entries.push(WantEntry { slot: Some(slot), tasks: own, condition: None });
            }
            for (t, helper) in conditional {
                slot += 1;
                entries.push(WantEntry { slot: Some(slot), tasks: vec![t], condition: helper });
            }
        }
        let free: Vec<TaskId> = caps.tasks_of(agent).filter(|t| !listed.contains(t)).cloned().collect();
        if !free.is_empty() {
            entries.push(WantEntry { slot: None, tasks: free, condition: None });
        }
        WantVector { owner: agent.clone(), entries }
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskId> {
        self.entries.iter().flat_map(|e| e.tasks.iter())
    }

    pub fn slots_increasing(&self) -> bool {
        let slots: Vec<u32> = self.entries.iter().filter_map(|e| e.slot).collect();
        slots.windows(2).all(|w| w[0] < w[1])
    }
}

impl fmt::Display for WantVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| {
                let tasks: Vec<&str> = e.tasks.iter().map(TaskId::as_str).collect();
                let head = e.slot.map(|s| format!("t{s}")).unwrap_or_default();
                let mut s = format!("{head}: {}", tasks.join(" ∨ "));
                if let Some(c) = &e.condition {
                    s.push_str(&format!(" if {c} {}", tasks.join(" ")));
                }
                s
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_form() {
        let d = |s: &str| TaskId::from(s);
        let w = WantVector {
            owner: AgentId::from("Ci"),
            entries: vec![
                WantEntry { slot: Some(1), tasks: vec![d("D1"), d("D2"), d("D3")], condition: None },
                WantEntry { slot: Some(2), tasks: vec![d("D4")], condition: Some(AgentId::from("Cj")) },
                WantEntry { slot: None, tasks: vec![d("D5")], condition: None },
            ],
        };
        assert_eq!(w.to_string(), "(t1: D1 ∨ D2 ∨ D3, t2: D4 if Cj D4, : D5)");
        assert!(w.slots_increasing());
    }

    #[test]
    fn derived_from_priorities() {
        let s = Scenario::parse(
            "[tasks]\nD1\nD2\nD3\nD4\nD5\n[agents]\nCi Cj\n[capabilities]\nCi: D1 D2 D3 D5\nCj: D4\n\
             [preferences]\nCi priority: D1 D2 D3 > D4\n",
        )
        .unwrap();
        let w = WantVector::derive(&s, &AgentId::from("Ci"));
        assert_eq!(w.to_string(), "(t1: D1 ∨ D2 ∨ D3, t2: D4 if Cj D4, : D5)");
    }
}

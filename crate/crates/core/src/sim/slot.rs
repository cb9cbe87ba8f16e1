//! Slot-by-slot reference stepper for the zero-delay model.
//!
//! The per-slot process `{(S_i(t), B_i(t))}` is a discrete-time Markov chain;
//! grouping its slots into transmission cycles yields exactly the
//! cycle-level model in [`super::exact`]. This stepper exists to check that
//! equivalence on shared random draws.

use crate::model::BackoffSchedule;

use super::exact::{resolve, CycleOutcome, NodeState};
use super::rng::BackoffStreams;

/// Full slot-level state: every node's stage and residual counter, plus the
/// number of idle slots elapsed in the current transmission cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotState {
    pub nodes: Vec<NodeState>,
    pub idle: u64,
}

impl SlotState {
    pub fn new(nodes: Vec<NodeState>) -> Self {
        Self { nodes, idle: 0 }
    }
}

/// Advances one backoff slot. Every counter decreases by one; nodes that
/// reach zero attempt at the end of the slot. Returns the completed cycle
/// when an attempt happened.
pub fn slot_level_reference_step(
    state: &mut SlotState,
    schedule: &BackoffSchedule,
    rngs: &mut BackoffStreams,
) -> Option<CycleOutcome> {
    state.idle += 1;
    let mut attackers = Vec::new();
    for (i, s) in state.nodes.iter_mut().enumerate() {
        s.backoff -= 1;
        if s.backoff == 0 {
            attackers.push(i);
        }
    }
    if attackers.is_empty() {
        return None;
    }
    let (kind, winner) = resolve(&mut state.nodes, &attackers, schedule, rngs);
    let idle_slots = std::mem::take(&mut state.idle);
    Some(CycleOutcome {
        kind,
        attackers,
        winner,
        idle_slots,
        misalignment: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_countdown_without_zero_counters() {
        let sch = BackoffSchedule::new(vec![8]).unwrap();
        let mut r = BackoffStreams::new(0, 2);
        let nodes = vec![
            NodeState {
                stage: 0,
                backoff: 3,
                misalign: 0,
            },
            NodeState {
                stage: 0,
                backoff: 5,
                misalign: 0,
            },
        ];
        let mut st = SlotState::new(nodes);
        assert!(slot_level_reference_step(&mut st, &sch, &mut r).is_none());
        assert_eq!(st.nodes[0].backoff, 2);
        assert_eq!(st.nodes[1].backoff, 4);
        assert_eq!(st.idle, 1);
    }

    #[test]
    fn emits_cycle_on_attempt() {
        let sch = BackoffSchedule::new(vec![8]).unwrap();
        let mut r = BackoffStreams::new(0, 2);
        let nodes = vec![
            NodeState {
                stage: 0,
                backoff: 2,
                misalign: 0,
            },
            NodeState {
                stage: 0,
                backoff: 5,
                misalign: 0,
            },
        ];
        let mut st = SlotState::new(nodes);
        assert!(slot_level_reference_step(&mut st, &sch, &mut r).is_none());
        let out = slot_level_reference_step(&mut st, &sch, &mut r).unwrap();
        assert_eq!(out.winner, Some(0));
        assert_eq!(out.idle_slots, 2);
        assert_eq!(st.nodes[1].backoff, 3);
        assert_eq!(st.idle, 0);
    }
}

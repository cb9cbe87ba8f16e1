//! Cycle-level transitions of the exact model.
//!
//! Each call advances the system by one transmission cycle: the idle
//! backoff slots up to the first attempt plus the resulting success or
//! collision.

use crate::model::{BackoffSchedule, PhyTiming};

use super::rng::BackoffStreams;

/// Per-node state at a transmission-cycle boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeState {
    /// Backoff stage `S` in `0..=K`.
    pub stage: usize,
    /// Residual backoff `B` in slots, `1..=W_S`.
    pub backoff: u64,
    /// Misalignment `Z` in slots, `0..=m`: the node starts counting `Z`
    /// slots after the cycle begins.
    pub misalign: u64,
}

/// Outcome class of a transmission cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    Success,
    Collision,
}

/// Result of one transmission cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleOutcome {
    pub kind: CycleKind,
    /// Nodes that attempted, in increasing index order.
    pub attackers: Vec<usize>,
    /// The successful node, if any.
    pub winner: Option<usize>,
    /// Idle backoff slots before the first attempt.
    pub idle_slots: u64,
    /// Gap between the two latest attempt instants (0 after a success).
    pub misalignment: u64,
}

impl CycleOutcome {
    /// Cycle duration in microseconds.
    pub fn duration_us(&self, timing: &PhyTiming) -> f64 {
        let busy = match self.kind {
            CycleKind::Success => timing.success_cycle_overhead(true),
            CycleKind::Collision => timing.collision_cycle_overhead(true),
        };
        self.idle_slots as f64 * timing.sigma + busy
    }
}

/// All nodes at stage 0 with fresh backoffs and no misalignment.
pub fn initial_state(
    n: usize,
    schedule: &BackoffSchedule,
    rngs: &mut BackoffStreams,
) -> Vec<NodeState> {
    let w0 = schedule.windows()[0];
    (0..n)
        .map(|i| NodeState {
            stage: 0,
            backoff: rngs.draw(i, w0),
            misalign: 0,
        })
        .collect()
}

/// Applies the success/collision rule to the attacking set and redraws
/// backoffs for the attackers.
pub(crate) fn resolve(
    state: &mut [NodeState],
    attackers: &[usize],
    schedule: &BackoffSchedule,
    rngs: &mut BackoffStreams,
) -> (CycleKind, Option<usize>) {
    if attackers.len() == 1 {
        let i = attackers[0];
        state[i].stage = 0;
        state[i].backoff = rngs.draw(i, schedule.windows()[0]);
        (CycleKind::Success, Some(i))
    } else {
        for &i in attackers {
            let s = schedule.next_stage(state[i].stage);
            state[i].stage = s;
            state[i].backoff = rngs.draw(i, schedule.windows()[s]);
        }
        (CycleKind::Collision, None)
    }
}

/// One cycle with zero propagation delay: nodes holding the minimum
/// residual backoff attempt, everybody else freezes after counting the
/// minimum.
pub fn advance_cycle_zero_delay(
    state: &mut [NodeState],
    schedule: &BackoffSchedule,
    rngs: &mut BackoffStreams,
) -> CycleOutcome {
    let min_b = state
        .iter()
        .map(|s| s.backoff)
        .min()
        .expect("at least one node");
    let mut attackers = Vec::new();
    for (i, s) in state.iter_mut().enumerate() {
        if s.backoff == min_b {
            attackers.push(i);
        } else {
            s.backoff -= min_b;
        }
    }
    let (kind, winner) = resolve(state, &attackers, schedule, rngs);
    CycleOutcome {
        kind,
        attackers,
        winner,
        idle_slots: min_b,
        misalignment: 0,
    }
}

/// One cycle with `m` slots of propagation delay.
///
/// Node `i` would attempt at instant `B_i + Z_i`. Every node whose instant is
/// within `m` slots of the earliest one attempts before it can hear the
/// channel; the others freeze when the first transmission reaches them. After
/// a collision the last attacker restarts immediately while every other node
/// starts counting after the gap between the two latest attempt instants.
pub fn advance_cycle_with_delay(
    state: &mut [NodeState],
    schedule: &BackoffSchedule,
    m: u64,
    rngs: &mut BackoffStreams,
) -> CycleOutcome {
    let first = state
        .iter()
        .map(|s| s.backoff + s.misalign)
        .min()
        .expect("at least one node");
    let horizon = first + m;
    let mut attackers = Vec::new();
    let mut instants = Vec::new();
    for (i, s) in state.iter_mut().enumerate() {
        let t = s.backoff + s.misalign;
        if t <= horizon {
            attackers.push(i);
            instants.push(t);
        } else {
            s.backoff = t - horizon;
        }
    }
    let misalignment = if attackers.len() >= 2 {
        let mut sorted = instants.clone();
        sorted.sort_unstable();
        let k = sorted.len();
        sorted[k - 1] - sorted[k - 2]
    } else {
        0
    };
    let latest = instants.iter().copied().max().unwrap_or(first);
    let (kind, winner) = resolve(state, &attackers, schedule, rngs);
    match kind {
        CycleKind::Success => state.iter_mut().for_each(|s| s.misalign = 0),
        CycleKind::Collision => {
            for (i, s) in state.iter_mut().enumerate() {
                let last = attackers
                    .iter()
                    .zip(&instants)
                    .any(|(&a, &t)| a == i && t == latest);
                s.misalign = if last { 0 } else { misalignment };
            }
        }
    }
    CycleOutcome {
        kind,
        attackers,
        winner,
        idle_slots: first,
        misalignment,
    }
}

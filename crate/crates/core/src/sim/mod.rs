//! Exact Monte-Carlo simulators of the cycle-level model, a slot-level
//! reference stepper and short-term unfairness diagnostics.
//!
//! Backoffs are uniform on `{1, ..., W_s}`, drawn from one reproducible
//! stream per node. Durations are tracked in microseconds: idle slots cost
//! `sigma` each and busy periods use the timing overheads.

mod exact;
mod rng;
mod slot;
mod stats;
mod unfairness;

pub use exact::{
    advance_cycle_with_delay, advance_cycle_zero_delay, initial_state, CycleKind, CycleOutcome,
    NodeState,
};
pub use rng::BackoffStreams;
pub use slot::{slot_level_reference_step, SlotState};
pub use stats::{
    estimate_conditional_rates, run_sim, ConditionalRates, NodeTally, SimConfig, SimStats,
    TraceRecord,
};
pub use unfairness::{windowed_unfairness, UnfairnessSeries};

//! The slot-level stepper and the cycle-level simulator produce the same
//! outcome sequence when they consume the same backoff draws.

use dcf_mrp::model::BackoffSchedule;
use dcf_mrp::sim::{
    advance_cycle_zero_delay, initial_state, slot_level_reference_step, BackoffStreams,
    CycleOutcome, SlotState,
};
use proptest::prelude::*;

fn cycle_path(schedule: &BackoffSchedule, n: usize, seed: u64, cycles: usize) -> Vec<CycleOutcome> {
    let mut rngs = BackoffStreams::new(seed, n);
    let mut state = initial_state(n, schedule, &mut rngs);
    (0..cycles)
        .map(|_| advance_cycle_zero_delay(&mut state, schedule, &mut rngs))
        .collect()
}

fn slot_path(schedule: &BackoffSchedule, n: usize, seed: u64, cycles: usize) -> Vec<CycleOutcome> {
    let mut rngs = BackoffStreams::new(seed, n);
    let mut state = SlotState::new(initial_state(n, schedule, &mut rngs));
    let mut out = Vec::with_capacity(cycles);
    while out.len() < cycles {
        if let Some(c) = slot_level_reference_step(&mut state, schedule, &mut rngs) {
            out.push(c);
        }
    }
    out
}

#[test]
fn ten_thousand_cycles_match() {
    for (schedule, n) in [
        (BackoffSchedule::ieee80211b(), 5),
        (BackoffSchedule::test_sequence_1(), 3),
        (BackoffSchedule::test_sequence_2(), 8),
        (BackoffSchedule::long_retry(), 2),
    ] {
        assert_eq!(
            cycle_path(&schedule, n, 11, 10_000),
            slot_path(&schedule, n, 11, 10_000)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_schedules_match(
        windows in prop::collection::vec(1u32..40, 1..6),
        n in 1usize..7,
        seed in any::<u64>(),
    ) {
        let schedule = BackoffSchedule::new(windows).unwrap();
        prop_assert_eq!(cycle_path(&schedule, n, seed, 500), slot_path(&schedule, n, seed, 500));
    }
}

//! Simulation driver and the per-node tallies behind the empirical
//! collision probability, throughput and conditional attempt rates.

use crate::error::{invalid, Result};
use crate::model::{AttemptRates, BackoffSchedule, PhyTiming};

use super::exact::{
    advance_cycle_with_delay, advance_cycle_zero_delay, initial_state, CycleKind, NodeState,
};
use super::rng::BackoffStreams;

/// Inputs of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub schedule: BackoffSchedule,
    pub n: usize,
    /// Propagation delay in whole slots.
    pub m: u64,
    pub timing: PhyTiming,
    pub cycles: u64,
    pub seed: u64,
    /// Keep a per-cycle trace (memory grows linearly with `cycles`).
    pub record_trace: bool,
}

impl SimConfig {
    /// Zero-delay run with default timing and no trace.
    pub fn zero_delay(schedule: BackoffSchedule, n: usize, cycles: u64, seed: u64) -> Self {
        Self {
            schedule,
            n,
            m: 0,
            timing: PhyTiming::default(),
            cycles,
            seed,
            record_trace: false,
        }
    }
}

/// One row of the cycle trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub kind: CycleKind,
    pub winner: Option<usize>,
    pub attackers: Vec<usize>,
    pub duration_us: f64,
    pub misalignment: u64,
}

/// Counters kept for every node.
///
/// A backoff cycle runs from a fresh backoff draw to the node's next
/// attempt. Its first segment is the backoff counted in the first
/// transmission cycle; it ends either in an attempt or in an interruption.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeTally {
    pub attempts: u64,
    pub collisions: u64,
    pub successes: u64,
    /// Backoff slots counted over the whole run.
    pub counted_slots: u64,
    /// Backoff cycles following an own success that were not interrupted.
    pub s_uninterrupted: u64,
    /// First-segment slots of backoff cycles following an own success.
    pub s_slots: u64,
    /// Backoff cycles following an own collision that were not interrupted.
    pub c_uninterrupted: u64,
    /// First-segment slots of backoff cycles following an own collision.
    pub c_slots: u64,
    /// Backoff cycles that were interrupted at least once.
    pub d_interrupted: u64,
    /// Residual backoff left at the first interruption, summed.
    pub d_slots: u64,
}

impl NodeTally {
    /// `C_i / A_i`, or `None` before the first attempt.
    pub fn gamma(&self) -> Option<f64> {
        ratio(self.collisions, self.attempts)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Aggregated results of [`run_sim`].
#[derive(Debug, Clone, Default)]
pub struct SimStats {
    pub nodes: Vec<NodeTally>,
    pub cycles: u64,
    pub successes: u64,
    pub collisions: u64,
    /// Time spent carrying successful payload, in microseconds.
    pub success_time_us: f64,
    pub elapsed_us: f64,
    pub trace: Vec<TraceRecord>,
}

impl SimStats {
    /// Collision probability averaged over nodes, `(1/n) sum_i C_i / A_i`.
    pub fn gamma(&self) -> f64 {
        mean(self.nodes.iter().filter_map(NodeTally::gamma))
    }

    /// Normalized throughput `T(t) / t`.
    pub fn theta(&self) -> f64 {
        if self.elapsed_us > 0.0 {
            self.success_time_us / self.elapsed_us
        } else {
            0.0
        }
    }

    /// Sequence of successful node ids (requires a recorded trace).
    pub fn success_ids(&self) -> Vec<usize> {
        self.trace.iter().filter_map(|r| r.winner).collect()
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Unknown,
    AfterSuccess,
    AfterCollision,
}

#[derive(Debug, Clone, Copy)]
struct Tracker {
    origin: Origin,
    interrupted: bool,
}

/// Runs the exact model for `cfg.cycles` transmission cycles. The result is
/// a deterministic function of the configuration and seed.
pub fn run_sim(cfg: &SimConfig) -> Result<SimStats> {
    if cfg.cycles == 0 {
        return invalid("cycles must be >= 1");
    }
    if cfg.n == 0 {
        return invalid("n must be >= 1");
    }
    cfg.timing.validate()?;
    let mut rngs = BackoffStreams::new(cfg.seed, cfg.n);
    let mut state = initial_state(cfg.n, &cfg.schedule, &mut rngs);
    let mut track = vec![
        Tracker {
            origin: Origin::Unknown,
            interrupted: false
        };
        cfg.n
    ];
    let mut stats = SimStats {
        nodes: vec![NodeTally::default(); cfg.n],
        ..SimStats::default()
    };
    let mut before: Vec<NodeState> = state.clone();
    for cycle in 0..cfg.cycles {
        before.copy_from_slice(&state);
        let out = if cfg.m == 0 {
            advance_cycle_zero_delay(&mut state, &cfg.schedule, &mut rngs)
        } else {
            advance_cycle_with_delay(&mut state, &cfg.schedule, cfg.m, &mut rngs)
        };
        let duration = out.duration_us(&cfg.timing);
        stats.cycles += 1;
        stats.elapsed_us += duration;
        match out.kind {
            CycleKind::Success => {
                stats.successes += 1;
                stats.success_time_us += cfg.timing.t_d;
            }
            CycleKind::Collision => stats.collisions += 1,
        }
        let mut a = 0;
        for i in 0..cfg.n {
            let tally = &mut stats.nodes[i];
            let t = &mut track[i];
            let attacked = a < out.attackers.len() && out.attackers[a] == i;
            if attacked {
                a += 1;
                let counted = before[i].backoff;
                tally.attempts += 1;
                tally.counted_slots += counted;
                if !t.interrupted {
                    match t.origin {
                        Origin::AfterSuccess => {
                            tally.s_uninterrupted += 1;
                            tally.s_slots += counted;
                        }
                        Origin::AfterCollision => {
                            tally.c_uninterrupted += 1;
                            tally.c_slots += counted;
                        }
                        Origin::Unknown => {}
                    }
                }
                t.origin = match out.kind {
                    CycleKind::Success => {
                        tally.successes += 1;
                        Origin::AfterSuccess
                    }
                    CycleKind::Collision => {
                        tally.collisions += 1;
                        Origin::AfterCollision
                    }
                };
                t.interrupted = false;
            } else {
                let counted = before[i].backoff - state[i].backoff;
                tally.counted_slots += counted;
                if !t.interrupted {
                    match t.origin {
                        Origin::AfterSuccess => tally.s_slots += counted,
                        Origin::AfterCollision => tally.c_slots += counted,
                        Origin::Unknown => {}
                    }
                    tally.d_interrupted += 1;
                    tally.d_slots += state[i].backoff;
                    t.interrupted = true;
                }
            }
        }
        if cfg.record_trace {
            stats.trace.push(TraceRecord {
                cycle,
                kind: out.kind,
                winner: out.winner,
                attackers: out.attackers,
                duration_us: duration,
                misalignment: out.misalignment,
            });
        }
    }
    Ok(stats)
}

/// Empirical conditional attempt rates, each `None` when no node observed
/// the corresponding kind of backoff cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalRates {
    pub beta_d: Option<f64>,
    pub beta_s: Option<f64>,
    pub beta_c: Option<f64>,
    pub beta: Option<f64>,
}

impl ConditionalRates {
    /// Converts to [`AttemptRates`], with NaN for unavailable rates.
    pub fn to_rates(&self) -> AttemptRates {
        let f = |o: Option<f64>| o.unwrap_or(f64::NAN);
        AttemptRates {
            beta_d: f(self.beta_d),
            beta_s: f(self.beta_s),
            beta_c: f(self.beta_c),
            beta: f(self.beta),
        }
    }
}

/// Per-node ratio estimators averaged over the nodes where they exist:
///
/// - `beta_d`: interrupted backoff cycles over residual backoff at the first
///   interruption.
/// - `beta_s` (`beta_c`): uninterrupted cycles following an own success
///   (collision) over the backoff counted in their first segment.
/// - `beta`: attempts over all counted backoff slots.
pub fn estimate_conditional_rates(stats: &SimStats) -> ConditionalRates {
    let avg = |f: &dyn Fn(&NodeTally) -> Option<f64>| {
        let v: Vec<f64> = stats.nodes.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    ConditionalRates {
        beta_d: avg(&|t| ratio(t.d_interrupted, t.d_slots)),
        beta_s: avg(&|t| ratio(t.s_uninterrupted, t.s_slots)),
        beta_c: avg(&|t| ratio(t.c_uninterrupted, t.c_slots)),
        beta: avg(&|t| ratio(t.attempts, t.counted_slots)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_attempting_schedule_always_collides() {
        let cfg = SimConfig::zero_delay(BackoffSchedule::new(vec![1]).unwrap(), 3, 1000, 1);
        let st = run_sim(&cfg).unwrap();
        assert_eq!(st.gamma(), 1.0);
        assert_eq!(st.collisions, 1000);
        assert_eq!(st.theta(), 0.0);
    }

    #[test]
    fn unit_initial_window_gives_unit_beta_s() {
        let cfg =
            SimConfig::zero_delay(BackoffSchedule::new(vec![1, 8, 16]).unwrap(), 2, 20_000, 4);
        let r = estimate_conditional_rates(&run_sim(&cfg).unwrap());
        assert_eq!(r.beta_s, Some(1.0));
    }

    #[test]
    fn single_node_never_interrupted() {
        let cfg = SimConfig::zero_delay(BackoffSchedule::new(vec![8]).unwrap(), 1, 500, 2);
        let st = run_sim(&cfg).unwrap();
        let r = estimate_conditional_rates(&st);
        assert_eq!(r.beta_d, None);
        assert_eq!(st.gamma(), 0.0);
        assert_eq!(st.successes, 500);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut cfg = SimConfig::zero_delay(BackoffSchedule::test_sequence_3(), 3, 5000, 9);
        cfg.record_trace = true;
        let a = run_sim(&cfg).unwrap();
        let b = run_sim(&cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.nodes, b.nodes);
        cfg.seed = 10;
        assert_ne!(run_sim(&cfg).unwrap().trace, a.trace);
    }

    #[test]
    fn cycle_accounting() {
        let mut cfg = SimConfig::zero_delay(BackoffSchedule::test_sequence_4(), 4, 3000, 5);
        cfg.m = 2;
        cfg.timing = PhyTiming::default().with_delay(45.0);
        cfg.record_trace = true;
        let st = run_sim(&cfg).unwrap();
        assert_eq!(st.successes + st.collisions, st.cycles);
        assert_eq!(st.success_ids().len() as u64, st.successes);
        assert!(st.theta() <= 1.0);
        for r in &st.trace {
            assert!(r.misalignment <= 2);
            if r.kind == CycleKind::Success {
                assert_eq!(r.misalignment, 0);
                assert_eq!(r.attackers.len(), 1);
            }
        }
        for t in &st.nodes {
            assert!(t.collisions <= t.attempts);
        }
    }

    #[test]
    fn rejects_zero_cycles() {
        let cfg = SimConfig::zero_delay(BackoffSchedule::test_sequence_3(), 2, 0, 1);
        assert!(run_sim(&cfg).is_err());
    }
}

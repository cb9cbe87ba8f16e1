//! Parameter tuning on top of the two-node delay analysis: the slot duration
//! that maximizes throughput for a given propagation delay, and the initial
//! backoff exponent that maximizes throughput under a bound on the mean
//! success-run length.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fairness::success_run_delay;
use crate::model::{BackoffSchedule, PerformanceReport, PhyTiming, Source};
use crate::mrp_delay::{performance_delay, solve_rates_delay};
use crate::mrp_zero::SolveOptions;

/// Smallest integer slot `sigma` (in us) with `floor(delta / sigma) = m`, or
/// `None` when no slot duration gives exactly `m`.
pub fn least_slot_for_m(delta_us: u64, m: usize) -> Option<u64> {
    let m = m as u64;
    let sigma = delta_us / (m + 1) + 1;
    (delta_us / sigma == m).then_some(sigma)
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// `m` in a slot sweep, `minBE` in a backoff sweep.
    pub decision: usize,
    pub sigma_us: u64,
    pub schedule: BackoffSchedule,
    pub report: PerformanceReport,
    /// Mean success-run length, when computed.
    pub eu1: Option<f64>,
    pub feasible: bool,
}

/// Points of a sweep and the index of the best feasible one.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Ties go to the smaller decision value; `None` when nothing is feasible.
    pub best: Option<usize>,
}

impl Sweep {
    fn new(points: Vec<SweepPoint>) -> Self {
        let mut best: Option<usize> = None;
        for (i, p) in points.iter().enumerate() {
            if p.feasible && best.is_none_or(|b| p.report.theta > points[b].report.theta) {
                best = Some(i);
            }
        }
        Self { points, best }
    }

    /// The best feasible point, or an error when the feasible set is empty.
    pub fn optimum(&self) -> Result<&SweepPoint> {
        match self.best {
            Some(i) => Ok(&self.points[i]),
            None => invalid("no sweep point satisfies the constraint"),
        }
    }
}

/// Two-node analysis for delay `m` with the durations of `timing`.
fn evaluate(
    schedule: &BackoffSchedule,
    m: usize,
    timing: &PhyTiming,
) -> Result<(PerformanceReport, f64)> {
    let sol = solve_rates_delay(schedule, m, &SolveOptions::default())?;
    let perf = performance_delay(&sol.rates, m, timing)?;
    let run = success_run_delay(&sol.rates, m)?;
    let report = PerformanceReport {
        gamma: perf.gamma,
        theta: perf.theta,
        rates: sol.rates,
        source: Source::MrpAnalysis,
        fairness: None,
    };
    Ok((report, run.eu1))
}

/// Throughput for `m = 0..=m_max` with the least slot achieving each `m`
/// for propagation delay `delta_us`. Values of `m` that no integer slot
/// produces are left out.
pub fn throughput_vs_m(
    delta_us: u64,
    m_max: usize,
    schedule: &BackoffSchedule,
    template: &PhyTiming,
) -> Result<Sweep> {
    if delta_us == 0 {
        return invalid("propagation delay must be positive");
    }
    let plan: Vec<(usize, u64)> = (0..=m_max)
        .filter_map(|m| least_slot_for_m(delta_us, m).map(|s| (m, s)))
        .collect();
    let points = plan
        .par_iter()
        .map(|&(m, sigma)| {
            let timing = template
                .with_sigma(sigma as f64)
                .with_delay(delta_us as f64);
            let (report, eu1) = evaluate(schedule, m, &timing)?;
            Ok(SweepPoint {
                decision: m,
                sigma_us: sigma,
                schedule: schedule.clone(),
                report,
                eu1: Some(eu1),
                feasible: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep::new(points))
}

/// Backoff sweep over `minBE` with windows `min(p^(minBE+k), p^maxBE)`,
/// `k = 0..=K`. A point is feasible when its mean success-run length is
/// below `eu1_max`. `timing` must give `floor(delta / sigma) = m`.
pub fn optimize_minbe(
    eu1_max: f64,
    minbe_range: RangeInclusive<u32>,
    p: u32,
    max_be: u32,
    k: usize,
    m: usize,
    timing: &PhyTiming,
) -> Result<Sweep> {
    timing.validate()?;
    if timing.m() != m {
        return invalid(format!("timing gives m = {}, expected {m}", timing.m()));
    }
    if eu1_max.is_nan() {
        return invalid("EU1 bound must be a number");
    }
    let schedules = minbe_range
        .map(|mb| BackoffSchedule::from_exponents(mb, p, max_be, k).map(|s| (mb, s)))
        .collect::<Result<Vec<_>>>()?;
    let points = schedules
        .par_iter()
        .map(|(mb, schedule)| {
            let (report, eu1) = evaluate(schedule, m, timing)?;
            Ok(SweepPoint {
                decision: *mb as usize,
                sigma_us: timing.sigma.round() as u64,
                schedule: schedule.clone(),
                report,
                eu1: Some(eu1),
                feasible: eu1 < eu1_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep::new(points))
}

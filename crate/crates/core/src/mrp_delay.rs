//! Approximate analysis of two nodes with a propagation delay of `m` slots.
//!
//! Nodes that attempt within `m` slots of each other collide, and after a
//! collision their backoffs restart up to `m` slots apart. The system is a
//! Markov regenerative process on this misalignment. Attempt rates come from
//! a tagged node whose state records its stage and its misalignment relative
//! to the other node, which attempts as a Bernoulli process.

use crate::error::{invalid, Result};
use crate::model::{AttemptRates, BackoffSchedule, PerformanceReport, PhyTiming, Source};
use crate::mrp_zero::{
    initial_point, iterate_rates, rate_box, spread_over_starts, MapEval, RateSolution, RateUpdate,
    SolveOptions, SystemPerformance,
};
use crate::stationary::{stationary_distribution, Matrix, DEFAULT_TOL};
use crate::util::powi;

/// Misalignment at the start of a transmission cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MisalignState {
    /// The previous cycle was a success.
    Success,
    /// The previous cycle was a collision between aligned attempts.
    Aligned,
    /// One node's backoff starts `k` slots after the other's, `1 <= k <= m`.
    Lag(usize),
}

impl MisalignState {
    /// Row/column of the state: `Success`, `Aligned`, then `Lag(1..=m)`.
    pub fn index(self) -> usize {
        match self {
            MisalignState::Success => 0,
            MisalignState::Aligned => 1,
            MisalignState::Lag(k) => 1 + k,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => MisalignState::Success,
            1 => MisalignState::Aligned,
            k => MisalignState::Lag(k - 1),
        }
    }
}

/// Misalignment of the tagged node relative to the other node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelMisalign {
    /// The tagged node's previous cycle was its own success.
    Success,
    /// Aligned after a collision.
    Aligned,
    /// The tagged node's backoff starts `k` slots after the other's.
    Behind(usize),
    /// The tagged node's backoff starts `k` slots before the other's.
    Ahead(usize),
}

impl RelMisalign {
    /// Position in `Success, Aligned, Behind(1..=m), Ahead(1..=m)`.
    pub fn index(self, m: usize) -> usize {
        match self {
            RelMisalign::Success => 0,
            RelMisalign::Aligned => 1,
            RelMisalign::Behind(k) => 1 + k,
            RelMisalign::Ahead(k) => 1 + m + k,
        }
    }

    pub fn from_index(i: usize, m: usize) -> Self {
        match i {
            0 => RelMisalign::Success,
            1 => RelMisalign::Aligned,
            i if i <= 1 + m => RelMisalign::Behind(i - 1),
            i => RelMisalign::Ahead(i - 1 - m),
        }
    }

    /// Number of values for delay `m`.
    pub fn count(m: usize) -> usize {
        2 * m + 2
    }

    /// Signed offset of the other node's attempt relative to the tagged one
    /// that produces this misalignment after a collision.
    fn collision_offset(self) -> i64 {
        match self {
            RelMisalign::Success | RelMisalign::Aligned => 0,
            RelMisalign::Behind(k) => k as i64,
            RelMisalign::Ahead(k) => -(k as i64),
        }
    }
}

/// State `(s, x)` of the tagged node at the start of a backoff cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaggedDelayState {
    pub s: usize,
    pub x: RelMisalign,
}

/// Enumeration of tagged states: `(0, Success)` first, then for each stage
/// `Aligned, Behind(1..=m), Ahead(1..=m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedDelaySpace {
    pub stages: usize,
    pub m: usize,
}

impl TaggedDelaySpace {
    pub fn new(schedule: &BackoffSchedule, m: usize) -> Self {
        Self {
            stages: schedule.stages(),
            m,
        }
    }

    pub fn len(&self) -> usize {
        1 + self.stages * (2 * self.m + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, st: TaggedDelayState) -> usize {
        match st.x {
            RelMisalign::Success => 0,
            x => 1 + st.s * (2 * self.m + 1) + x.index(self.m) - 1,
        }
    }

    pub fn state(&self, i: usize) -> TaggedDelayState {
        if i == 0 {
            return TaggedDelayState {
                s: 0,
                x: RelMisalign::Success,
            };
        }
        let per = 2 * self.m + 1;
        TaggedDelayState {
            s: (i - 1) / per,
            x: RelMisalign::from_index((i - 1) % per + 1, self.m),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = TaggedDelayState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// `sum_{e=lo}^{hi} (1 - beta)^e`, zero for an empty range.
fn geo(beta: f64, lo: i64, hi: i64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    let r = 1.0 - beta;
    if beta == 0.0 {
        return (hi - lo + 1) as f64;
    }
    (r.powi(lo as i32) - r.powi(hi as i32 + 1)) / beta
}

fn check_rates(rates: &AttemptRates) -> Result<()> {
    rates.check_probabilities()
}

/// Transition matrix over [`MisalignState`] (size `m + 2`).
pub fn misalign_transition_matrix(rates: &AttemptRates, m: usize) -> Result<Matrix> {
    check_rates(rates)?;
    let (bs, bd, bc) = (rates.beta_s, rates.beta_d, rates.beta_c);
    let den_s = 1.0 - (1.0 - bs) * (1.0 - bd);
    let den_c = 1.0 - (1.0 - bc) * (1.0 - bc);
    if !(den_s > 0.0) || !(den_c > 0.0) {
        return invalid("no node can attempt from some misalignment state");
    }
    let mut p = Matrix::zeros(m + 2, m + 2);
    p[(0, 0)] = (bs * powi(1.0 - bd, m + 1) + bd * powi(1.0 - bs, m + 1)) / den_s;
    p[(0, 1)] = bs * bd / den_s;
    let rc = 1.0 - bc;
    p[(1, 0)] = 2.0 * bc * powi(rc, m + 1) / den_c;
    p[(1, 1)] = bc * bc / den_c;
    for k in 1..=m {
        p[(0, 1 + k)] = (bs * powi(1.0 - bd, k) * bd + bd * powi(1.0 - bs, k) * bs) / den_s;
        p[(1, 1 + k)] = 2.0 * bc * bc * powi(rc, k) / den_c;
    }
    for k in 1..=m {
        let row = 1 + k;
        let lead = powi(rc, k);
        p[(row, 0)] = lead * p[(1, 0)];
        p[(row, 1)] = lead * p[(1, 1)];
        for j in 1..=k {
            // The leading node attempts at slot j; the other one is silent
            // through slot j + m with probability (1 - beta_c)^(j + m - k).
            p[(row, 0)] += powi(rc, j - 1) * bc * powi(rc, j + m - k);
        }
        for k2 in 1..=m {
            let mut v = lead * p[(1, 1 + k2)];
            for j in (k + 1).saturating_sub(k2).max(1)..=k {
                v += powi(rc, j - 1) * bc * powi(rc, j + k2 - k - 1) * bc;
            }
            p[(row, 1 + k2)] = v;
        }
    }
    Ok(p)
}

/// Per-state cycle means: collisions counted per attacker, attackers,
/// data time and cycle duration.
struct CycleMeans {
    ec: f64,
    ea: f64,
    et: f64,
    ex: f64,
}

fn cycle_means(
    state: MisalignState,
    rates: &AttemptRates,
    m: usize,
    timing: &PhyTiming,
) -> CycleMeans {
    let (bs, bd, bc) = (rates.beta_s, rates.beta_d, rates.beta_c);
    let (t_s, t_c, sigma, t_d) = (
        timing.success_cycle_overhead(true),
        timing.collision_cycle_overhead(true),
        timing.sigma,
        timing.t_d,
    );
    let q = |b: f64| 1.0 - powi(1.0 - b, m);
    let aligned = || {
        let den = 1.0 - (1.0 - bc) * (1.0 - bc);
        let qc = q(bc);
        let lone = 2.0 * bc * (1.0 - bc);
        CycleMeans {
            ec: (2.0 * lone * qc + 2.0 * bc * bc) / den,
            ea: (lone * (1.0 + qc) + 2.0 * bc * bc) / den,
            et: lone * (1.0 - qc) * t_d / den,
            ex: (sigma + (bc * bc + lone * qc) * t_c + lone * (1.0 - qc) * t_s) / den,
        }
    };
    match state {
        MisalignState::Success => {
            let den = 1.0 - (1.0 - bs) * (1.0 - bd);
            let (qd, qs) = (q(bd), q(bs));
            let (ls, ld) = (bs * (1.0 - bd), bd * (1.0 - bs));
            let both = bs * bd;
            let ok = ls * (1.0 - qd) + ld * (1.0 - qs);
            CycleMeans {
                ec: (2.0 * ls * qd + 2.0 * ld * qs + 2.0 * both) / den,
                ea: (ls * (1.0 + qd) + ld * (1.0 + qs) + 2.0 * both) / den,
                et: ok * t_d / den,
                ex: (sigma + (both + ls * qd + ld * qs) * t_c + ok * t_s) / den,
            }
        }
        MisalignState::Aligned => aligned(),
        MisalignState::Lag(k) => {
            let base = aligned();
            let rc = 1.0 - bc;
            let lead = powi(rc, k);
            let mut out = CycleMeans {
                ec: lead * base.ec,
                ea: lead * base.ea,
                et: lead * base.et,
                ex: lead * (k as f64 * sigma + base.ex),
            };
            for j in 1..=k {
                let w = powi(rc, j - 1) * bc;
                let pj = 1.0 - powi(rc, j + m - k);
                out.ec += w * 2.0 * pj;
                out.ea += w * (1.0 + pj);
                out.et += w * (1.0 - pj) * t_d;
                out.ex += w * (j as f64 * sigma + (1.0 - pj) * t_s + pj * t_c);
            }
            out
        }
    }
}

/// Collision probability and throughput for two nodes with delay `m` slots.
/// Busy periods use the delayed overheads of `timing`.
pub fn performance_delay(
    rates: &AttemptRates,
    m: usize,
    timing: &PhyTiming,
) -> Result<SystemPerformance> {
    timing.validate()?;
    let p = misalign_transition_matrix(rates, m)?;
    let pi = stationary_distribution(&p, DEFAULT_TOL)?;
    let (mut ec, mut ea, mut et, mut ex) = (0.0, 0.0, 0.0, 0.0);
    for (i, w) in pi.iter().enumerate() {
        let c = cycle_means(MisalignState::from_index(i), rates, m, timing);
        ec += w * c.ec;
        ea += w * c.ea;
        et += w * c.et;
        ex += w * c.ex;
    }
    Ok(SystemPerformance {
        gamma: ec / ea,
        theta: et / ex,
        pi,
    })
}

/// Table `h[b][x]` for `b = 0..=b_max` (row 0 unused and zero): the
/// distribution of the tagged node's next misalignment when it resumes with
/// residual backoff `b` while the other node, having just succeeded,
/// attempts with `beta_s`.
fn h_table(b_max: usize, m: usize, beta_s: f64) -> Vec<Vec<f64>> {
    let nx = RelMisalign::count(m);
    let r = 1.0 - beta_s;
    let mut h = vec![vec![0.0; nx]; b_max + 1];
    let mut re = vec![0.0; nx];
    for b in 1..=b_max {
        if b >= m + 2 {
            for x in 0..nx {
                re[x] = r * re[x] + beta_s * h[b - m - 1][x];
            }
        }
        let row = &mut h[b];
        row[0] = powi(r, b + m);
        row[1] = powi(r, b - 1) * beta_s;
        for k in 1..=m {
            row[1 + k] = powi(r, b + k - 1) * beta_s;
            row[1 + m + k] = if b > k {
                powi(r, b - k - 1) * beta_s
            } else {
                0.0
            };
        }
        for x in 0..nx {
            row[x] += re[x];
        }
    }
    h
}

/// Distribution of the next misalignment after an interruption that leaves
/// residual backoff `b`, in [`RelMisalign::index`] order.
pub fn residual_outcome_distribution(b: usize, m: usize, beta_s: f64) -> Result<Vec<f64>> {
    if b == 0 {
        return invalid("residual backoff must be >= 1");
    }
    if !(0.0..=1.0).contains(&beta_s) {
        return invalid(format!("beta_s = {beta_s} is not a probability"));
    }
    Ok(h_table(b, m, beta_s).swap_remove(b))
}

/// First transmission cycle of a backoff cycle started in a tagged state:
/// the window, the other node's rate and the offsets of both backoffs.
#[derive(Debug, Clone, Copy)]
struct FirstCycle {
    w: usize,
    beta: f64,
    /// Slots before the tagged node starts counting.
    a: usize,
    /// Slots before the other node starts counting.
    c: usize,
    m: usize,
}

impl FirstCycle {
    fn new(
        s: usize,
        x: RelMisalign,
        rates: &AttemptRates,
        schedule: &BackoffSchedule,
        m: usize,
    ) -> Self {
        let w = schedule.w(s);
        let (beta, a, c) = match x {
            RelMisalign::Success => (rates.beta_d, 0, 0),
            RelMisalign::Aligned => (rates.beta_c, 0, 0),
            RelMisalign::Behind(k) => (rates.beta_c, k, 0),
            RelMisalign::Ahead(k) => (rates.beta_c, 0, k),
        };
        Self { w, beta, a, c, m }
    }

    /// Backoff values up to `d` are never interrupted; a backoff `l > d`
    /// offers `l - d` slots in which the other node's attempt interrupts.
    fn d(&self) -> usize {
        self.m + 1 + self.c - self.a
    }

    /// Number of interruption opportunities of the longest backoff.
    fn max_gap(&self) -> usize {
        self.w.saturating_sub(self.d())
    }

    fn non_interruption(&self) -> Vec<f64> {
        let nx = RelMisalign::count(self.m);
        let (w, a, c, m) = (self.w as i64, self.a as i64, self.c as i64, self.m as i64);
        let mut out = vec![0.0; nx];
        out[0] = geo(self.beta, 1 + a + m - c, w + a + m - c) / self.w as f64;
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let delta = RelMisalign::from_index(i, self.m).collision_offset();
            // Exponent e = l + a + delta - c - 1 must be non-negative.
            let l_lo = (c + 1 - a - delta).max(1);
            let shift = a + delta - c - 1;
            *o = self.beta * geo(self.beta, l_lo + shift, w + shift) / self.w as f64;
        }
        out
    }

    fn interruption_probability(&self) -> f64 {
        let r = 1.0 - self.beta;
        let mut sum = 0.0;
        let mut rp = 1.0;
        for _ in 1..=self.max_gap() {
            rp *= r;
            sum += 1.0 - rp;
        }
        sum / self.w as f64
    }

    fn residual_mean(&self) -> f64 {
        let r = 1.0 - self.beta;
        let (mut f, mut total, mut rp) = (0.0, 0.0, 1.0);
        for _ in 1..=self.max_gap() {
            rp *= r;
            f += 1.0 - rp;
            total += f;
        }
        total / self.w as f64
    }

    fn first_segment_mean(&self) -> f64 {
        let d = self.d();
        let r = 1.0 - self.beta;
        let head = self.w.min(d);
        let mut total = (head * (head + 1)) as f64 / 2.0;
        let (mut g, mut rw, mut rp) = (0.0, 1.0, 1.0);
        for gap in 1..=self.max_gap() {
            g += rw * self.beta * (gap + d - 1) as f64;
            rw *= r;
            rp *= r;
            total += rp * (gap + d) as f64 + g;
        }
        total / self.w as f64
    }
}

/// Interruption probability of a backoff cycle started in `(s, x)`.
pub fn interruption_probability_delay(
    s: usize,
    x: RelMisalign,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    m: usize,
) -> f64 {
    FirstCycle::new(s, x, rates, schedule, m).interruption_probability()
}

/// Mean backoff figures of the first transmission cycle of a backoff cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMeans {
    /// Mean residual backoff at an interruption (0 if not interrupted).
    pub residual: f64,
    /// Mean backoff counted until the attempt or the interruption.
    pub first: f64,
}

/// Segment means of a backoff cycle started in `(s, x)`.
pub fn segment_means_delay(
    s: usize,
    x: RelMisalign,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    m: usize,
) -> SegmentMeans {
    let fc = FirstCycle::new(s, x, rates, schedule, m);
    SegmentMeans {
        residual: fc.residual_mean(),
        first: fc.first_segment_mean(),
    }
}

/// Outcome probabilities of a backoff cycle started in `(s, x)`, split into
/// cycles that end without an interruption and cycles that were interrupted,
/// both indexed by the next misalignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcomes {
    pub non_interrupted: Vec<f64>,
    pub interrupted: Vec<f64>,
}

/// Precomputed tables shared by all rows of the tagged matrix.
struct OutcomeTables {
    /// Prefix sums over the number of interruption opportunities of the
    /// per-outcome interrupted mass, for the other node at `beta_c` and
    /// at `beta_d`.
    prefix_c: Vec<Vec<f64>>,
    prefix_d: Vec<Vec<f64>>,
}

impl OutcomeTables {
    fn new(rates: &AttemptRates, schedule: &BackoffSchedule, m: usize) -> Self {
        let b_max = (schedule.max_window() as usize).saturating_sub(1);
        let h = h_table(b_max, m, rates.beta_s);
        let prefix = |beta: f64| {
            let nx = RelMisalign::count(m);
            let mut c = vec![0.0; nx];
            let mut pre = vec![vec![0.0; nx]; b_max + 1];
            for l in 1..=b_max {
                for x in 0..nx {
                    c[x] = (1.0 - beta) * c[x] + beta * h[l][x];
                    pre[l][x] = pre[l - 1][x] + c[x];
                }
            }
            pre
        };
        Self {
            prefix_c: prefix(rates.beta_c),
            prefix_d: prefix(rates.beta_d),
        }
    }

    fn outcomes(&self, fc: &FirstCycle, x: RelMisalign) -> CycleOutcomes {
        let pre = if x == RelMisalign::Success {
            &self.prefix_d
        } else {
            &self.prefix_c
        };
        let interrupted = pre[fc.max_gap()].iter().map(|v| v / fc.w as f64).collect();
        CycleOutcomes {
            non_interrupted: fc.non_interruption(),
            interrupted,
        }
    }
}

/// Outcome split of the backoff cycle started in `(s, x)`.
pub fn cycle_outcomes_delay(
    s: usize,
    x: RelMisalign,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    m: usize,
) -> CycleOutcomes {
    let fc = FirstCycle::new(s, x, rates, schedule, m);
    OutcomeTables::new(rates, schedule, m).outcomes(&fc, x)
}

/// Transition matrix of the tagged chain over [`TaggedDelaySpace`].
pub fn tagged_transition_matrix_delay(
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    m: usize,
) -> Result<Matrix> {
    check_rates(rates)?;
    let space = TaggedDelaySpace::new(schedule, m);
    let tables = OutcomeTables::new(rates, schedule, m);
    let mut q = Matrix::zeros(space.len(), space.len());
    for (i, st) in space.states().enumerate() {
        let fc = FirstCycle::new(st.s, st.x, rates, schedule, m);
        let out = tables.outcomes(&fc, st.x);
        let next = schedule.next_stage(st.s);
        for xi in 0..RelMisalign::count(m) {
            let x2 = RelMisalign::from_index(xi, m);
            let j = space.index(TaggedDelayState { s: next, x: x2 });
            q[(i, j)] += out.non_interrupted[xi] + out.interrupted[xi];
        }
    }
    Ok(q)
}

/// `beta_s` as a function of `beta_d` and the delay.
pub fn beta_s_delay(rates: &AttemptRates, schedule: &BackoffSchedule, m: usize) -> f64 {
    let fc = FirstCycle::new(0, RelMisalign::Success, rates, schedule, m);
    (1.0 - fc.interruption_probability()) / fc.first_segment_mean()
}

/// One step of the fixed-point map given the tagged stationary distribution.
pub fn rate_update_delay(
    psi: &[f64],
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    m: usize,
) -> Result<RateUpdate> {
    let space = TaggedDelaySpace::new(schedule, m);
    if psi.len() != space.len() {
        return invalid(format!(
            "psi has {} entries, expected {}",
            psi.len(),
            space.len()
        ));
    }
    let (mut d_num, mut d_den, mut c_num, mut c_den, mut mean_b) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, st) in space.states().enumerate() {
        let w = psi[i];
        let fc = FirstCycle::new(st.s, st.x, rates, schedule, m);
        let p_i = fc.interruption_probability();
        d_num += w * p_i;
        d_den += w * fc.residual_mean();
        if i != 0 {
            c_num += w * (1.0 - p_i);
            c_den += w * fc.first_segment_mean();
        }
        mean_b += w * schedule.mean(st.s);
    }
    let degenerate = !(d_den > 0.0);
    let beta_d = if degenerate { 1.0 } else { d_num / d_den };
    let beta_c = if c_den > 0.0 {
        c_num / c_den
    } else {
        rates.beta_c
    };
    Ok(RateUpdate {
        rates: AttemptRates {
            beta_d,
            beta_s: beta_s_delay(rates, schedule, m),
            beta_c,
            beta: 1.0 / mean_b,
        },
        beta_d_degenerate: degenerate,
    })
}

fn full_rates(beta_d: f64, beta_c: f64, schedule: &BackoffSchedule, m: usize) -> AttemptRates {
    let mut r = AttemptRates::new(beta_d, f64::NAN, beta_c);
    r.beta_s = beta_s_delay(&r, schedule, m);
    r
}

/// Solves the two-node `(beta_d, beta_c)` fixed point with delay `m`.
pub fn solve_rates_delay(
    schedule: &BackoffSchedule,
    m: usize,
    opts: &SolveOptions,
) -> Result<RateSolution> {
    let start = initial_point(schedule, 2, opts)?;
    iterate_rates(start, rate_box(schedule), opts, |bd, bc| {
        let rates = full_rates(bd, bc, schedule, m);
        let q = tagged_transition_matrix_delay(&rates, schedule, m)?;
        let psi = stationary_distribution(&q, DEFAULT_TOL)?;
        let update = rate_update_delay(&psi, &rates, schedule, m)?;
        Ok(MapEval { rates, psi, update })
    })
}

/// Largest disagreement between solutions started from spread points.
pub fn multistart_spread_delay(schedule: &BackoffSchedule, m: usize, tol: f64) -> Result<f64> {
    spread_over_starts(schedule, tol, |opts| solve_rates_delay(schedule, m, opts))
}

/// Rejects node counts other than two.
pub fn check_two_nodes(n: usize) -> Result<()> {
    if n != 2 {
        return invalid(format!("delay analysis supports n=2 only (got n={n})"));
    }
    Ok(())
}

/// Two-node rates, collision probability and throughput with
/// `m = floor(delta / sigma)`; throughput uses the exact delays.
pub fn analyze_delay(schedule: &BackoffSchedule, timing: &PhyTiming) -> Result<PerformanceReport> {
    timing.validate()?;
    let m = timing.m();
    let sol = solve_rates_delay(schedule, m, &SolveOptions::default())?;
    let perf = performance_delay(&sol.rates, m, timing)?;
    Ok(PerformanceReport {
        gamma: perf.gamma,
        theta: perf.theta,
        rates: sol.rates,
        source: Source::MrpAnalysis,
        fairness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp_zero::{
        cycle_transition_matrix, first_segment_backoff_mean, interruption_probability,
        performance_zero_delay, residual_backoff_mean, solve_rates_zero_delay,
        tagged_transition_matrix,
    };
    use crate::stationary::max_row_sum_error;

    fn rates(bd: f64, bs: f64, bc: f64) -> AttemptRates {
        AttemptRates::new(bd, bs, bc)
    }

    fn small() -> BackoffSchedule {
        BackoffSchedule::new(vec![4, 9, 16]).unwrap()
    }

    #[test]
    fn misalign_rows_sum_to_one() {
        for m in 0..6 {
            let p = misalign_transition_matrix(&rates(0.2, 0.7, 0.35), m).unwrap();
            assert!(max_row_sum_error(&p) < 1e-14, "m={m}");
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn misalign_always_attempt_collides() {
        let p = misalign_transition_matrix(&AttemptRates::uniform(1.0), 3).unwrap();
        assert_eq!(p[(0, 1)], 1.0);
    }

    #[test]
    fn misalign_zero_delay_formula() {
        let (bd, bs) = (0.3, 0.6);
        let p = misalign_transition_matrix(&rates(bd, bs, 0.4), 0).unwrap();
        let den = 1.0 - (1.0 - bd) * (1.0 - bs);
        assert!((p[(0, 0)] - (bs * (1.0 - bd) + bd * (1.0 - bs)) / den).abs() < 1e-15);
        assert!((p[(0, 0)] + p[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn misalign_lag_cannot_collide_aligned_except_after_silence() {
        let r = rates(0.2, 0.7, 0.35);
        let p = misalign_transition_matrix(&r, 4).unwrap();
        for k in 1..=4 {
            assert!((p[(1 + k, 1)] - 0.65f64.powi(k as i32) * p[(1, 1)]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_delay_performance_matches_two_node_cycle_chain() {
        let r = rates(0.13, 0.52, 0.21);
        let t = PhyTiming::default();
        let a = performance_delay(&r, 0, &t).unwrap();
        let b = performance_zero_delay(&r, 2, &t).unwrap();
        assert!((a.gamma - b.gamma).abs() < 1e-12);
        assert!((a.theta - b.theta).abs() < 1e-12);
        let p0 = misalign_transition_matrix(&r, 0).unwrap();
        let p1 = cycle_transition_matrix(&r, 2).unwrap();
        assert!((p0 - p1).abs().max() < 1e-15);
    }

    #[test]
    fn certain_collision_when_both_always_attempt() {
        let c = cycle_means(
            MisalignState::Aligned,
            &AttemptRates::uniform(1.0),
            3,
            &PhyTiming::default(),
        );
        assert!((c.ec - 2.0).abs() < 1e-15);
    }

    #[test]
    fn h_silent_peer() {
        let h = residual_outcome_distribution(7, 3, 0.0).unwrap();
        assert_eq!(h[0], 1.0);
        assert!(h[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn h_base_case() {
        let h = residual_outcome_distribution(1, 0, 0.3).unwrap();
        assert!((h[0] - 0.7).abs() < 1e-15);
        assert!((h[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn h_sums_to_one() {
        for m in [0, 1, 3, 7] {
            for bs in [0.05, 0.4, 0.9, 1.0] {
                let t = h_table(300, m, bs);
                for b in 1..=300 {
                    let s: f64 = t[b].iter().sum();
                    assert!((s - 1.0).abs() < 1e-12, "m={m} bs={bs} b={b} s={s}");
                }
            }
        }
    }

    #[test]
    fn outcome_partition_is_complete() {
        let sched = BackoffSchedule::ieee80211b();
        let r = rates(0.03, 0.4, 0.07);
        for m in [0, 2, 5] {
            let space = TaggedDelaySpace::new(&sched, m);
            for st in space.states() {
                let o = cycle_outcomes_delay(st.s, st.x, &r, &sched, m);
                let ni: f64 = o.non_interrupted.iter().sum();
                let qi: f64 = o.interrupted.iter().sum();
                let pi = interruption_probability_delay(st.s, st.x, &r, &sched, m);
                assert!((qi - pi).abs() < 1e-12, "{st:?}");
                assert!((ni + qi - 1.0).abs() < 1e-12, "{st:?} ni={ni} qi={qi}");
            }
        }
    }

    #[test]
    fn tagged_rows_sum_to_one_and_only_two_destinations() {
        let sched = small();
        let r = rates(0.2, 0.6, 0.3);
        let m = 2;
        let q = tagged_transition_matrix_delay(&r, &sched, m).unwrap();
        assert!(max_row_sum_error(&q) < 1e-12);
        let space = TaggedDelaySpace::new(&sched, m);
        for (i, st) in space.states().enumerate() {
            for (j, dst) in space.states().enumerate() {
                if q[(i, j)] != 0.0 {
                    assert!(
                        j == 0 || dst.s == sched.next_stage(st.s),
                        "{st:?} -> {dst:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn silent_peer_keeps_success_state() {
        let sched = small();
        let q = tagged_transition_matrix_delay(&rates(0.0, 0.5, 0.3), &sched, 3).unwrap();
        assert!((q[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn space_index_round_trip() {
        let space = TaggedDelaySpace { stages: 4, m: 3 };
        for i in 0..space.len() {
            assert_eq!(space.index(space.state(i)), i);
        }
        assert_eq!(space.len(), 1 + 4 * 7);
    }

    #[test]
    fn zero_delay_tagged_matrix_matches_two_node_chain() {
        let sched = small();
        let r = rates(0.2, 0.6, 0.3);
        let a = tagged_transition_matrix_delay(&r, &sched, 0).unwrap();
        let b = tagged_transition_matrix(&r, &sched, 2).unwrap();
        assert!((a - b).abs().max() < 1e-12);
    }

    #[test]
    fn zero_delay_segment_quantities_match() {
        let sched = BackoffSchedule::ieee80211b();
        let r = rates(0.05, 0.4, 0.09);
        for s in 0..sched.stages() {
            for (x, n_a) in [(RelMisalign::Aligned, 2), (RelMisalign::Success, 1)] {
                if x == RelMisalign::Success && s > 0 {
                    continue;
                }
                let sm = segment_means_delay(s, x, &r, &sched, 0);
                let pi = interruption_probability_delay(s, x, &r, &sched, 0);
                assert!((pi - interruption_probability(s, n_a, &r, &sched, 2)).abs() < 1e-12);
                assert!((sm.residual - residual_backoff_mean(s, n_a, &r, &sched, 2)).abs() < 1e-9);
                assert!(
                    (sm.first - first_segment_backoff_mean(s, n_a, &r, &sched, 2)).abs() < 1e-9
                );
            }
        }
    }

    #[test]
    fn short_window_never_interrupted() {
        let sched = BackoffSchedule::new(vec![3, 8]).unwrap();
        let r = rates(0.4, 0.5, 0.3);
        let m = 2;
        assert_eq!(
            interruption_probability_delay(0, RelMisalign::Success, &r, &sched, m),
            0.0
        );
        let sm = segment_means_delay(0, RelMisalign::Success, &r, &sched, m);
        assert!((sm.first - 2.0).abs() < 1e-15);
        assert_eq!(sm.residual, 0.0);
    }

    #[test]
    fn silent_peer_counts_full_backoff() {
        let sched = BackoffSchedule::new(vec![10]).unwrap();
        let sm = segment_means_delay(0, RelMisalign::Success, &rates(0.0, 0.5, 0.3), &sched, 3);
        assert!((sm.first - 5.5).abs() < 1e-12);
    }

    #[test]
    fn behind_is_interrupted_more_than_ahead() {
        let sched = BackoffSchedule::ieee80211b();
        let r = rates(0.05, 0.4, 0.09);
        let m = 6;
        for s in 0..sched.stages() {
            for k in 1..=m {
                let plus = interruption_probability_delay(s, RelMisalign::Behind(k), &r, &sched, m);
                let minus = interruption_probability_delay(s, RelMisalign::Ahead(k), &r, &sched, m);
                assert!(plus >= minus);
                let sm = segment_means_delay(s, RelMisalign::Behind(k), &r, &sched, m);
                assert!(sm.first <= (sched.w(s) as f64 + 1.0) / 2.0 + (m - k) as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_delay_solution_matches_two_node_solution() {
        let sched = BackoffSchedule::ieee80211b();
        let opts = SolveOptions {
            tol: 1e-12,
            ..SolveOptions::default()
        };
        let a = solve_rates_delay(&sched, 0, &opts).unwrap();
        let b = solve_rates_zero_delay(&sched, 2, &opts).unwrap();
        for (x, y) in [
            (a.rates.beta_d, b.rates.beta_d),
            (a.rates.beta_s, b.rates.beta_s),
            (a.rates.beta_c, b.rates.beta_c),
            (a.rates.beta, b.rates.beta),
        ] {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_other_node_counts() {
        assert!(check_two_nodes(3).is_err());
        assert!(check_two_nodes(2).is_ok());
    }
}

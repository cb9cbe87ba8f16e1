//! Approximate analysis without propagation delay.
//!
//! The system is a Markov regenerative process on the number of nodes that
//! attempted in the previous transmission cycle. Attempt rates depend on a
//! node's recent history (`beta_s`, `beta_c`, `beta_d`). They are obtained
//! from a tagged node that keeps the uniform backoff while the other nodes
//! attempt as Bernoulli processes.

use crate::bianchi::solve_bianchi_fp;
use crate::error::{invalid, Error, Result};
use crate::model::{AttemptRates, BackoffSchedule, PerformanceReport, PhyTiming, Source};
use crate::stationary::{stationary_distribution, Matrix, SparseMatrix, DEFAULT_TOL};
use crate::util::{binom, exactly, powi};

/// Probability that exactly `n_a_next` nodes attempt together in a slot when
/// the `n_a` previous attackers attempt with `beta_x` and the rest with
/// `beta_d`. `n_a_next = 0` gives the all-silent probability.
pub fn joint_attempt_prob(n_a: usize, n_a_next: usize, rates: &AttemptRates, n: usize) -> f64 {
    exactly(
        n_a_next,
        n_a,
        rates.last_attackers(n_a),
        n - n_a,
        rates.beta_d,
    )
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return invalid("the analysis needs n >= 2");
    }
    Ok(())
}

/// Transition matrix over `n_a = 1..=n` (row/column `n_a - 1`).
pub fn cycle_transition_matrix(rates: &AttemptRates, n: usize) -> Result<Matrix> {
    check_n(n)?;
    rates.check_probabilities()?;
    let mut p = Matrix::zeros(n, n);
    for n_a in 1..=n {
        let den = 1.0 - joint_attempt_prob(n_a, 0, rates, n);
        if !(den > 0.0) {
            return invalid(format!("no node can attempt from state n_a = {n_a}"));
        }
        for k in 1..=n {
            p[(n_a - 1, k - 1)] = joint_attempt_prob(n_a, k, rates, n) / den;
        }
    }
    Ok(p)
}

/// Long-run collision probability and throughput of the system chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemPerformance {
    pub gamma: f64,
    pub theta: f64,
    /// Stationary distribution over `n_a = 1..=n`.
    pub pi: Vec<f64>,
}

/// Collision probability `sum pi EC / sum pi EA` and throughput
/// `sum pi ET / sum pi EX` for given attempt rates.
pub fn performance_zero_delay(
    rates: &AttemptRates,
    n: usize,
    timing: &PhyTiming,
) -> Result<SystemPerformance> {
    timing.validate()?;
    let p = cycle_transition_matrix(rates, n)?;
    let pi = stationary_distribution(&p, DEFAULT_TOL)?;
    let t_s = timing.success_cycle_overhead(false);
    let t_c = timing.collision_cycle_overhead(false);
    let (mut ec, mut ea, mut et, mut ex) = (0.0, 0.0, 0.0, 0.0);
    for n_a in 1..=n {
        let w = pi[n_a - 1];
        let den = 1.0 - joint_attempt_prob(n_a, 0, rates, n);
        let q1 = joint_attempt_prob(n_a, 1, rates, n);
        let mut busy = q1 * t_s;
        for k in 1..=n {
            let pk = p[(n_a - 1, k - 1)];
            ea += w * pk * k as f64;
            if k >= 2 {
                ec += w * pk * k as f64;
                busy += joint_attempt_prob(n_a, k, rates, n) * t_c;
            }
        }
        et += w * q1 * timing.t_d / den;
        ex += w * (timing.sigma + busy) / den;
    }
    Ok(SystemPerformance {
        gamma: ec / ea,
        theta: et / ex,
        pi,
    })
}

/// State `(s, n_a)` of the tagged node at the start of a backoff cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaggedState {
    pub s: usize,
    pub n_a: usize,
}

/// Enumeration of the reachable tagged states: `(0, 1)` first, then
/// `(s, n_a)` for `s = 0..=K`, `n_a = 2..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedSpace {
    pub stages: usize,
    pub n: usize,
}

impl TaggedSpace {
    pub fn new(schedule: &BackoffSchedule, n: usize) -> Self {
        Self {
            stages: schedule.stages(),
            n,
        }
    }

    pub fn len(&self) -> usize {
        1 + self.stages * (self.n - 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, st: TaggedState) -> usize {
        if st.n_a == 1 {
            0
        } else {
            1 + st.s * (self.n - 1) + (st.n_a - 2)
        }
    }

    pub fn state(&self, i: usize) -> TaggedState {
        if i == 0 {
            TaggedState { s: 0, n_a: 1 }
        } else {
            TaggedState {
                s: (i - 1) / (self.n - 1),
                n_a: (i - 1) % (self.n - 1) + 2,
            }
        }
    }

    pub fn states(&self) -> impl Iterator<Item = TaggedState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// Per-slot probability that none of the other nodes attempts during the
/// first transmission cycle of a backoff cycle started in state `(., n_a)`.
fn first_cycle_silence(n_a: usize, rates: &AttemptRates, n: usize) -> f64 {
    powi(1.0 - rates.beta_c, n_a - 1) * powi(1.0 - rates.beta_d, n - n_a)
}

/// Probability that exactly `y` of the other nodes attempt in one slot of the
/// first transmission cycle of a backoff cycle started with `n_a` attackers.
fn first_cycle_slot(y: usize, n_a: usize, rates: &AttemptRates, n: usize) -> f64 {
    exactly(y, n_a - 1, rates.beta_c, n - n_a, rates.beta_d)
}

/// Probability that exactly `y` of the other nodes attempt in one slot after
/// the tagged node was interrupted by `e` nodes.
fn resumed_slot(y: usize, e: usize, rates: &AttemptRates, n: usize) -> f64 {
    exactly(y, e, rates.last_attackers(e), n - 1 - e, rates.beta_d)
}

/// State `(s, n_a, b)` of the auxiliary chain embedded at every
/// transmission-cycle start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuxState {
    pub s: usize,
    pub n_a: usize,
    pub b: usize,
}

/// Number of states of the auxiliary chain.
pub fn aux_state_count(schedule: &BackoffSchedule, n: usize) -> usize {
    let sum_w: usize = (0..schedule.stages()).map(|s| schedule.w(s) - 1).sum();
    (n - 1) * sum_w + (n - 1) * schedule.stages() + 1
}

/// Explicit auxiliary chain: the state list and its sparse transition
/// matrix. Entries are evaluated term by term from the binomial sums over
/// the sets `G(x, y)`; this costs `O(W^2 n^3)` per stage and is intended for
/// small configurations and cross-checks.
pub fn aux_transition_matrix(
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> Result<(Vec<AuxState>, SparseMatrix)> {
    check_n(n)?;
    rates.check_probabilities()?;
    let ks = schedule.stages();
    let mut states = vec![AuxState { s: 0, n_a: 1, b: 0 }];
    for s in 0..ks {
        for n_a in 2..=n {
            states.push(AuxState { s, n_a, b: 0 });
        }
    }
    for s in 0..ks {
        for n_a in 1..n {
            for b in 1..schedule.w(s) {
                states.push(AuxState { s, n_a, b });
            }
        }
    }
    let index: std::collections::HashMap<AuxState, usize> =
        states.iter().enumerate().map(|(i, st)| (*st, i)).collect();
    let (bd, bc) = (rates.beta_d, rates.beta_c);
    // Sum over (i, j) in G(x, y) with i from a group of `a` nodes (rate pa)
    // and j from a group of `c` nodes (rate pb), over a gap of `d` slots.
    let g_sum = |a: usize, pa: f64, c: usize, pb: f64, y: usize, d: usize| -> f64 {
        let mut t = 0.0;
        for i in 0..=a.min(y) {
            let j = y - i;
            if j > c {
                continue;
            }
            t += powi(powi(1.0 - pb, d - 1) * pb, j)
                * powi(powi(1.0 - pa, d - 1) * pa, i)
                * binom(a, i)
                * powi(1.0 - pa, d * (a - i))
                * binom(c, j)
                * powi(1.0 - pb, d * (c - j));
        }
        t
    };
    let success = index[&AuxState { s: 0, n_a: 1, b: 0 }];
    let mut q = SparseMatrix::new(states.len());
    for (row, st) in states.iter().enumerate() {
        let AuxState { s, n_a, b } = *st;
        let next_s = schedule.next_stage(s);
        if b == 0 {
            let w = schedule.w(s);
            let inv = 1.0 / w as f64;
            let ps: f64 = (1..=w)
                .map(|l| powi(1.0 - bd, l * (n - n_a)) * powi(1.0 - bc, l * (n_a - 1)))
                .sum();
            q.add(row, success, inv * ps);
            for n_next in 2..=n {
                let v: f64 = (1..=w)
                    .map(|l| g_sum(n_a - 1, bc, n - n_a, bd, n_next - 1, l))
                    .sum();
                q.add(
                    row,
                    index[&AuxState {
                        s: next_s,
                        n_a: n_next,
                        b: 0,
                    }],
                    inv * v,
                );
            }
            for n_next in 1..n {
                for b_next in 1..w {
                    let v: f64 = (b_next + 1..=w)
                        .map(|l| g_sum(n_a - 1, bc, n - n_a, bd, n_next, l - b_next))
                        .sum();
                    q.add(
                        row,
                        index[&AuxState {
                            s,
                            n_a: n_next,
                            b: b_next,
                        }],
                        inv * v,
                    );
                }
            }
        } else {
            let bx = rates.last_attackers(n_a);
            let others = n - 1 - n_a;
            q.add(
                row,
                success,
                powi(1.0 - bd, b * others) * powi(1.0 - bx, b * n_a),
            );
            for n_next in 2..=n {
                let v = g_sum(n_a, bx, others, bd, n_next - 1, b);
                q.add(
                    row,
                    index[&AuxState {
                        s: next_s,
                        n_a: n_next,
                        b: 0,
                    }],
                    v,
                );
            }
            for n_next in 1..n {
                for b_next in 1..b {
                    let v = g_sum(n_a, bx, others, bd, n_next, b - b_next);
                    q.add(
                        row,
                        index[&AuxState {
                            s,
                            n_a: n_next,
                            b: b_next,
                        }],
                        v,
                    );
                }
            }
        }
    }
    Ok((states, q))
}

/// Stationary distribution over tagged states from the stationary
/// distribution `phi` of the auxiliary chain, by restriction to `b = 0`.
pub fn tagged_stationary(
    states: &[AuxState],
    phi: &[f64],
    space: &TaggedSpace,
) -> Result<Vec<f64>> {
    let mut psi = vec![0.0; space.len()];
    for (st, &v) in states.iter().zip(phi) {
        if st.b == 0 {
            psi[space.index(TaggedState {
                s: st.s,
                n_a: st.n_a,
            })] += v;
        }
    }
    let total: f64 = psi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Singular(
            "no stationary mass on backoff-cycle starts".into(),
        ));
    }
    psi.iter_mut().for_each(|x| *x /= total);
    Ok(psi)
}

/// Transition matrix of the tagged chain between backoff-cycle starts.
///
/// This is the auxiliary chain observed only at `b = 0` states. Each row is
/// obtained by a slot-level recursion over the pair (interrupting group,
/// residual backoff): the residual drops by one every slot and the group
/// changes whenever other nodes attempt. The cost is `O(W_s n^2)` per row.
pub fn tagged_transition_matrix(
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> Result<Matrix> {
    check_n(n)?;
    rates.check_probabilities()?;
    let space = TaggedSpace::new(schedule, n);
    // Slot probabilities: row 0 is reserved for the first-cycle group and is
    // filled per start state; rows 1..n-1 are groups of `e` interrupters.
    let mut slot = vec![vec![0.0; n]; n];
    for (e, row) in slot.iter_mut().enumerate().skip(1) {
        for (y, v) in row.iter_mut().enumerate() {
            *v = resumed_slot(y, e, rates, n);
        }
    }
    let mut p = Matrix::zeros(space.len(), space.len());
    for (row, st) in space.states().enumerate() {
        for (y, v) in slot[0].iter_mut().enumerate() {
            *v = first_cycle_slot(y, st.n_a, rates, n);
        }
        let w = schedule.w(st.s);
        let next_s = schedule.next_stage(st.s);
        // mass[g][r]: probability the tagged node has r slots left and the
        // current group is g at the start of a slot.
        let mut mass = vec![vec![0.0; w + 1]; n];
        for r in 1..=w {
            mass[0][r] = 1.0 / w as f64;
        }
        for r in (1..=w).rev() {
            for g in 0..n {
                let m = mass[g][r];
                if m == 0.0 {
                    continue;
                }
                let sp = &slot[g];
                if r == 1 {
                    p[(row, 0)] += m * sp[0];
                    for y in 1..n {
                        let col = space.index(TaggedState {
                            s: next_s,
                            n_a: y + 1,
                        });
                        p[(row, col)] += m * sp[y];
                    }
                } else {
                    mass[g][r - 1] += m * sp[0];
                    for y in 1..n {
                        mass[y][r - 1] += m * sp[y];
                    }
                }
            }
        }
    }
    Ok(p)
}

/// Stationary distribution of the tagged chain.
pub fn tagged_stationary_direct(
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> Result<Vec<f64>> {
    let p = tagged_transition_matrix(rates, schedule, n)?;
    stationary_distribution(&p, DEFAULT_TOL)
}

/// Interruption probability of a backoff cycle started in `(s, n_a)`.
pub fn interruption_probability(
    s: usize,
    n_a: usize,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> f64 {
    let rho = first_cycle_silence(n_a, rates, n);
    let w = schedule.w(s);
    let mut sum = 0.0;
    let mut rp = 1.0;
    for _ in 1..=w {
        sum += 1.0 - rp;
        rp *= rho;
    }
    sum / w as f64
}

/// Mean residual backoff left at the first interruption of a backoff cycle
/// started in `(s, n_a)` (0 if not interrupted).
pub fn residual_backoff_mean(
    s: usize,
    n_a: usize,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> f64 {
    let rho = first_cycle_silence(n_a, rates, n);
    let w = schedule.w(s);
    // For backoff l: sum_{w'<l} (l - w') rho^(w'-1) (1 - rho)
    //   = l * (1 - rho^(l-1)) - sum_{w'<l} w' rho^(w'-1) (1 - rho).
    let mut total = 0.0;
    let mut rp = 1.0; // rho^(l-1)
    let mut weighted = 0.0; // sum_{w'<l} w' rho^(w'-1) (1 - rho)
    for l in 1..=w {
        total += l as f64 * (1.0 - rp) - weighted;
        weighted += l as f64 * rp * (1.0 - rho);
        rp *= rho;
    }
    total / w as f64
}

/// Mean backoff counted in the first transmission cycle of a backoff cycle
/// started in `(s, n_a)`: until the attempt or the first interruption.
pub fn first_segment_backoff_mean(
    s: usize,
    n_a: usize,
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> f64 {
    let rho = first_cycle_silence(n_a, rates, n);
    let w = schedule.w(s);
    let mut total = 0.0;
    let mut rp = 1.0;
    let mut weighted = 0.0;
    for l in 1..=w {
        total += l as f64 * rp + weighted;
        weighted += l as f64 * rp * (1.0 - rho);
        rp *= rho;
    }
    total / w as f64
}

/// Attempt rates produced by one fixed-point step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateUpdate {
    pub rates: AttemptRates,
    /// True when no interruption is possible and `beta_d` was set to 1.
    pub beta_d_degenerate: bool,
}

/// `beta_s` as a function of `beta_d`: attempts over first-segment backoff
/// after an own success.
pub fn beta_s_of(rates: &AttemptRates, schedule: &BackoffSchedule, n: usize) -> f64 {
    let pi = interruption_probability(0, 1, rates, schedule, n);
    (1.0 - pi) / first_segment_backoff_mean(0, 1, rates, schedule, n)
}

/// One step of the fixed-point map given the tagged stationary distribution.
pub fn rate_update(
    psi: &[f64],
    rates: &AttemptRates,
    schedule: &BackoffSchedule,
    n: usize,
) -> Result<RateUpdate> {
    check_n(n)?;
    let space = TaggedSpace::new(schedule, n);
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
        let p_i = interruption_probability(st.s, st.n_a, rates, schedule, n);
        d_num += w * p_i;
        d_den += w * residual_backoff_mean(st.s, st.n_a, rates, schedule, n);
        if i != 0 {
            c_num += w * (1.0 - p_i);
            c_den += w * first_segment_backoff_mean(st.s, st.n_a, rates, schedule, n);
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
            beta_s: beta_s_of(rates, schedule, n),
            beta_c,
            beta: 1.0 / mean_b,
        },
        beta_d_degenerate: degenerate,
    })
}

/// Options of the zero-delay fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial `(beta_d, beta_c)`; the classical fixed point when `None`.
    pub start: Option<(f64, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            start: None,
        }
    }
}

/// Converged attempt rates and the tagged stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    pub rates: AttemptRates,
    pub psi: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm of the last `(beta_d, beta_c)` change.
    pub residual: f64,
    pub beta_d_degenerate: bool,
}

/// Box `[1 / W_max, 1]` that the fixed-point map preserves.
pub fn rate_box(schedule: &BackoffSchedule) -> (f64, f64) {
    (1.0 / schedule.max_window() as f64, 1.0)
}

pub(crate) fn full_rates(
    beta_d: f64,
    beta_c: f64,
    schedule: &BackoffSchedule,
    n: usize,
) -> AttemptRates {
    let mut r = AttemptRates::new(beta_d, f64::NAN, beta_c);
    r.beta_s = beta_s_of(&r, schedule, n);
    r
}

/// One evaluation of a fixed-point map at `(beta_d, beta_c)`.
pub(crate) struct MapEval {
    pub rates: AttemptRates,
    pub psi: Vec<f64>,
    pub update: RateUpdate,
}

/// Successive substitution on `(beta_d, beta_c)`, halving the step once an
/// oscillation in either coordinate is seen.
pub(crate) fn iterate_rates(
    start: (f64, f64),
    bounds: (f64, f64),
    opts: &SolveOptions,
    eval: impl Fn(f64, f64) -> Result<MapEval>,
) -> Result<RateSolution> {
    let (lo, hi) = bounds;
    let (mut bd, mut bc) = start;
    if !(lo..=hi).contains(&bd) || !(lo..=hi).contains(&bc) {
        return invalid(format!("initial rates ({bd}, {bc}) outside [{lo}, {hi}]"));
    }
    let mut damping = 1.0;
    let mut prev_step = (0.0, 0.0);
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let ev = eval(bd, bc)?;
        let step = (ev.update.rates.beta_d - bd, ev.update.rates.beta_c - bc);
        residual = step.0.abs().max(step.1.abs());
        if residual <= opts.tol {
            let fin = eval(ev.update.rates.beta_d, ev.update.rates.beta_c)?;
            return Ok(RateSolution {
                rates: AttemptRates {
                    beta: fin.update.rates.beta,
                    ..fin.rates
                },
                psi: fin.psi,
                iterations: it,
                residual,
                beta_d_degenerate: fin.update.beta_d_degenerate,
            });
        }
        if step.0 * prev_step.0 < 0.0 || step.1 * prev_step.1 < 0.0 {
            damping = (damping * 0.5f64).max(1.0 / 64.0);
        }
        prev_step = step;
        bd += damping * step.0;
        bc += damping * step.1;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Initial point: the options' start or the classical fixed point.
pub(crate) fn initial_point(
    schedule: &BackoffSchedule,
    n: usize,
    opts: &SolveOptions,
) -> Result<(f64, f64)> {
    match opts.start {
        Some(s) => Ok(s),
        None => {
            let b = solve_bianchi_fp(schedule, n, 1e-12)?.beta;
            Ok((b, b))
        }
    }
}

/// Solves the `(beta_d, beta_c)` fixed point of the zero-delay tagged model.
pub fn solve_rates_zero_delay(
    schedule: &BackoffSchedule,
    n: usize,
    opts: &SolveOptions,
) -> Result<RateSolution> {
    check_n(n)?;
    let start = initial_point(schedule, n, opts)?;
    iterate_rates(start, rate_box(schedule), opts, |bd, bc| {
        let rates = full_rates(bd, bc, schedule, n);
        let psi = tagged_stationary_direct(&rates, schedule, n)?;
        let update = rate_update(&psi, &rates, schedule, n)?;
        Ok(MapEval { rates, psi, update })
    })
}

/// Solves from spread starting points inside the rate box and returns the
/// largest sup-norm disagreement between the solutions.
pub fn multistart_spread(schedule: &BackoffSchedule, n: usize, tol: f64) -> Result<f64> {
    spread_over_starts(schedule, tol, |opts| {
        solve_rates_zero_delay(schedule, n, opts)
    })
}

/// Five starting points spread over the rate box, as `(beta_d, beta_c)`.
pub fn spread_starts(schedule: &BackoffSchedule) -> [(f64, f64); 5] {
    let (lo, hi) = rate_box(schedule);
    let at = |f: f64| lo + f * (hi - lo);
    [
        (0.05, 0.05),
        (0.95, 0.95),
        (0.05, 0.95),
        (0.95, 0.05),
        (0.5, 0.5),
    ]
    .map(|(a, b)| (at(a), at(b)))
}

pub(crate) fn spread_over_starts(
    schedule: &BackoffSchedule,
    tol: f64,
    solve: impl Fn(&SolveOptions) -> Result<RateSolution>,
) -> Result<f64> {
    let mut sols = Vec::new();
    for start in spread_starts(schedule) {
        let opts = SolveOptions {
            tol,
            start: Some(start),
            ..SolveOptions::default()
        };
        sols.push(solve(&opts)?.rates);
    }
    let mut spread: f64 = 0.0;
    for x in &sols {
        for y in &sols {
            spread = spread
                .max((x.beta_d - y.beta_d).abs())
                .max((x.beta_c - y.beta_c).abs());
        }
    }
    Ok(spread)
}

/// Rates, collision probability and throughput without propagation delay.
pub fn analyze_zero_delay(
    schedule: &BackoffSchedule,
    n: usize,
    timing: &PhyTiming,
) -> Result<PerformanceReport> {
    let sol = solve_rates_zero_delay(schedule, n, &SolveOptions::default())?;
    let perf = performance_zero_delay(&sol.rates, n, timing)?;
    Ok(PerformanceReport {
        gamma: perf.gamma,
        theta: perf.theta,
        rates: sol.rates,
        source: Source::MrpAnalysis,
        fairness: None,
    })
}

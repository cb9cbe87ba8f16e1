//! Short-term fairness measures computed from solved attempt rates: Jain's
//! index of per-node successes over frames of `L` cycles following a success
//! of Node 1, and the mean length of a node's run of consecutive successes.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::model::AttemptRates;
use crate::stationary::Matrix;
use crate::util::{exactly, powi};

/// State `(n_a, z)`: `n_a` nodes attempted in the last cycle and `z`
/// records whether Node 1 was one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttackerIdentityState {
    pub n_a: usize,
    pub z: bool,
}

/// Position of a state in the order `(1,1), (1,0), (2,1), (2,0), ..., (n,1)`.
pub fn identity_index(st: AttackerIdentityState) -> usize {
    2 * (st.n_a - 1) + usize::from(!st.z)
}

/// Inverse of [`identity_index`].
pub fn identity_state(i: usize) -> AttackerIdentityState {
    AttackerIdentityState {
        n_a: i / 2 + 1,
        z: i.is_multiple_of(2),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return invalid("fairness measures need n >= 2");
    }
    Ok(())
}

/// Transition matrix of the attacker-identity chain (size `2n - 1`).
pub fn identity_chain(rates: &AttemptRates, n: usize) -> Result<Matrix> {
    check_n(n)?;
    rates.check_probabilities()?;
    let size = 2 * n - 1;
    let bd = rates.beta_d;
    let mut p = Matrix::zeros(size, size);
    for i in 0..size {
        let st = identity_state(i);
        let bx = rates.last_attackers(st.n_a);
        let den = 1.0 - powi(1.0 - bx, st.n_a) * powi(1.0 - bd, n - st.n_a);
        if !(den > 0.0) {
            return invalid(format!(
                "no node can attempt from state ({}, {})",
                st.n_a,
                u8::from(st.z)
            ));
        }
        for n2 in 1..=n {
            let (to0, to1) = if st.z {
                let others = |y| exactly(y, st.n_a - 1, bx, n - st.n_a, bd);
                ((1.0 - bx) * others(n2), bx * others(n2 - 1))
            } else {
                let others = |y| exactly(y, st.n_a, bx, n - 1 - st.n_a, bd);
                ((1.0 - bd) * others(n2), bd * others(n2 - 1))
            };
            if n2 < n {
                p[(
                    i,
                    identity_index(AttackerIdentityState { n_a: n2, z: false }),
                )] = to0 / den;
            }
            p[(
                i,
                identity_index(AttackerIdentityState { n_a: n2, z: true }),
            )] = to1 / den;
        }
    }
    Ok(p)
}

/// `ES_1(l; state)` for `l = 1..=L`: row `l - 1` holds the expected
/// successes of Node 1 in `l` cycles from every starting state.
pub fn expected_success_counts(
    rates: &AttemptRates,
    n: usize,
    frame_len: usize,
) -> Result<Vec<Vec<f64>>> {
    if frame_len == 0 {
        return invalid("frame length must be >= 1");
    }
    let p = identity_chain(rates, n)?;
    let target = identity_index(AttackerIdentityState { n_a: 1, z: true });
    let hit = p.column(target).into_owned();
    let mut v = DVector::zeros(p.nrows());
    let mut out = Vec::with_capacity(frame_len);
    for _ in 0..frame_len {
        v = &hit + &p * &v;
        out.push(v.iter().copied().collect());
    }
    Ok(out)
}

/// Jain's index `(sum ER_i)^2 / (n sum ER_i^2)` of the mean per-node
/// successes over a frame of `frame_len` cycles that follows a success of
/// Node 1.
pub fn jain_index(rates: &AttemptRates, n: usize, frame_len: usize) -> Result<f64> {
    let es = expected_success_counts(rates, n, frame_len)?;
    let last = &es[frame_len - 1];
    let own = last[identity_index(AttackerIdentityState { n_a: 1, z: true })];
    let other = last[identity_index(AttackerIdentityState { n_a: 1, z: false })];
    Ok(jain_of(&[own, other], &[1, n - 1]))
}

/// Jain's index of values `x[k]` repeated `mult[k]` times; NaN when all are 0.
pub fn jain_of(x: &[f64], mult: &[usize]) -> f64 {
    let count: usize = mult.iter().sum();
    let mean = x.iter().zip(mult).map(|(v, &c)| v * c as f64).sum::<f64>() / count as f64;
    let sq: f64 = x.iter().zip(mult).map(|(v, &c)| v * v * c as f64).sum();
    if sq == 0.0 {
        return f64::NAN;
    }
    // Equivalent to (sum x)^2 / (count sum x^2), written so that equal
    // values give exactly 1.
    let spread: f64 = x
        .iter()
        .zip(mult)
        .map(|(v, &c)| (v - mean).powi(2) * c as f64)
        .sum();
    1.0 - spread / sq
}

/// Values of `r11` above this are reported as an effectively infinite run.
pub const R11_CAP: f64 = 1.0 - 1e-9;
/// Cap applied to the mean run length.
pub const EU1_CAP: f64 = 1e9;

/// Probability that the next success is again by the last successful node,
/// and the mean run length `EU1 = 1 / (1 - r11)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRun {
    pub r11: f64,
    pub eu1: f64,
    /// True when `r11` exceeded [`R11_CAP`] and `eu1` was capped.
    pub capped: bool,
}

impl SuccessRun {
    fn from_r11(r11: f64) -> Self {
        if r11 > R11_CAP {
            SuccessRun {
                r11,
                eu1: EU1_CAP,
                capped: true,
            }
        } else {
            SuccessRun {
                r11,
                eu1: 1.0 / (1.0 - r11),
                capped: false,
            }
        }
    }
}

/// Solves `r = p_hit + P_cc r` over the collision states and returns
/// `P(start, hit) + P(start, coll) r`.
fn absorb(
    p_cc: &Matrix,
    p_hit: &DVector<f64>,
    start_hit: f64,
    start_cc: &DVector<f64>,
) -> Result<f64> {
    let k = p_cc.nrows();
    if k == 0 {
        return Ok(start_hit);
    }
    let a = Matrix::identity(k, k) - p_cc;
    let r = a
        .lu()
        .solve(p_hit)
        .ok_or_else(|| Error::Singular("success-run system is singular".into()))?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("success-run system is singular".into()));
    }
    Ok(start_hit + start_cc.dot(&r))
}

/// Success run without propagation delay for `n` nodes.
pub fn success_run_zero_delay(rates: &AttemptRates, n: usize) -> Result<SuccessRun> {
    if n == 2 {
        return success_run_delay(rates, 0);
    }
    let p = identity_chain(rates, n)?;
    let hit = identity_index(AttackerIdentityState { n_a: 1, z: true });
    let coll: Vec<usize> = (2..p.nrows()).collect();
    let p_cc = p.select_rows(&coll).select_columns(&coll);
    let p_hit = DVector::from_iterator(coll.len(), coll.iter().map(|&i| p[(i, hit)]));
    let start_cc = DVector::from_iterator(coll.len(), coll.iter().map(|&j| p[(hit, j)]));
    let r11 = absorb(&p_cc, &p_hit, p[(hit, hit)], &start_cc)?;
    Ok(SuccessRun::from_r11(r11.clamp(0.0, 1.0)))
}

/// Closed form of `1 - r11` for two nodes without delay.
pub fn p12_two_nodes(beta_s: f64, beta_d: f64) -> f64 {
    beta_d * (1.0 - 0.5 * beta_s) / (beta_s + beta_d * (1.0 - beta_s))
}

/// Checks on a grid that `|beta_d / beta_s - 1| <= 2 eps` implies
/// `|p12 - 1/2| <= eps`; returns the largest violation (0 when it holds).
pub fn rate_ratio_box_violation(eps: f64, grid: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..=grid {
        let bs = i as f64 / grid as f64;
        for j in 0..=grid {
            let ratio = 1.0 - 2.0 * eps + 4.0 * eps * j as f64 / grid as f64;
            let bd = bs * ratio;
            if !(bd > 0.0 && bd <= 1.0) {
                continue;
            }
            let dev = (p12_two_nodes(bs, bd) - 0.5).abs() - eps;
            worst = worst.max(dev);
        }
    }
    worst
}

/// Two-node misalignment state that also tracks which node succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuccessMisalignState {
    /// Node 1 succeeded in the last cycle.
    Node1,
    /// Node 2 succeeded in the last cycle.
    Node2,
    /// Aligned after a collision.
    Aligned,
    /// Node 1's backoff starts `k` slots after Node 2's.
    Node1Deferred(usize),
    /// Node 2's backoff starts `k` slots after Node 1's.
    Node2Deferred(usize),
}

/// Outcome probabilities of one cycle in which Node 1 attempts with `a1`
/// from slot `o1 + 1` and Node 2 with `a2` from slot `o2 + 1`, with a delay
/// of `m` slots: `(node 1 wins, node 2 wins, collisions by offset)` where
/// entry `d + m` is a collision with Node 2 attempting `d` slots after Node 1.
fn pair_outcomes(a1: f64, a2: f64, o1: usize, o2: usize, m: usize) -> (f64, f64, Vec<f64>) {
    let (r1, r2) = (1.0 - a1, 1.0 - a2);
    let den = 1.0 - r1 * r2;
    let win1 = a1 * powi(r2, o1 + 1 + m - o2) / den;
    let win2 = a2 * powi(r1, o2 + 1 + m - o1) / den;
    let mut coll = vec![0.0; 2 * m + 1];
    let (o1, o2, mi) = (o1 as i64, o2 as i64, m as i64);
    for d in -mi..=mi {
        let x0 = (o1 + 1).max(o2 + 1 - d);
        let e1 = (x0 - o1 - 1) as usize;
        let e2 = (x0 + d - o2 - 1) as usize;
        coll[(d + mi) as usize] = a1 * a2 * powi(r1, e1) * powi(r2, e2) / den;
    }
    (win1, win2, coll)
}

/// Probability that Node 1 wins the next success from each collision state
/// (index `d + m`), where both nodes attempt with `bc`.
fn collision_win_probabilities(bc: f64, m: usize) -> Result<DVector<f64>> {
    // Index d + m: Node 2 attempted d slots after Node 1, which leaves Node 1
    // deferred by d (d > 0) or Node 2 by -d.
    let k = 2 * m + 1;
    let mut p_cc = Matrix::zeros(k, k);
    let mut p_hit = DVector::zeros(k);
    for i in 0..k {
        let (o1, o2) = if i >= m { (i - m, 0) } else { (0, m - i) };
        let (w1, _, coll) = pair_outcomes(bc, bc, o1, o2, m);
        p_hit[i] = w1;
        for (j, c) in coll.into_iter().enumerate() {
            p_cc[(i, j)] = c;
        }
    }
    (Matrix::identity(k, k) - p_cc)
        .lu()
        .solve(&p_hit)
        .filter(|r| r.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("success-run system is singular".into()))
}

/// Success run for two nodes with a delay of `m` slots.
pub fn success_run_delay(rates: &AttemptRates, m: usize) -> Result<SuccessRun> {
    rates.check_probabilities()?;
    let (bs, bd, bc) = (rates.beta_s, rates.beta_d, rates.beta_c);
    if !(1.0 - (1.0 - bs) * (1.0 - bd) > 0.0) || !(bc > 0.0) {
        return invalid("no node can attempt from some state");
    }
    let r = if m == 0 {
        DVector::zeros(1)
    } else {
        collision_win_probabilities(bc, m)?
    };
    // Collision states at offsets d and -d are mirror images, so Node 1
    // wins from -d with probability 1 - r(d) and from 0 with probability 1/2.
    let (w1, w2, coll) = pair_outcomes(bs, bd, 0, 0, m);
    let mut r11 = 0.5 + 0.5 * (w1 - w2);
    for d in 1..=m {
        r11 += (coll[m + d] - coll[m - d]) * (r[m + d] - 0.5);
    }
    Ok(SuccessRun::from_r11(r11.clamp(0.0, 1.0)))
}

/// Transition probabilities out of a [`SuccessMisalignState`], listed as
/// `(destination, probability)` with zero entries omitted.
pub fn success_misalign_row(
    from: SuccessMisalignState,
    rates: &AttemptRates,
    m: usize,
) -> Vec<(SuccessMisalignState, f64)> {
    use SuccessMisalignState::*;
    let (bs, bd, bc) = (rates.beta_s, rates.beta_d, rates.beta_c);
    let (a1, a2, o1, o2) = match from {
        Node1 => (bs, bd, 0, 0),
        Node2 => (bd, bs, 0, 0),
        Aligned => (bc, bc, 0, 0),
        Node1Deferred(k) => (bc, bc, k, 0),
        Node2Deferred(k) => (bc, bc, 0, k),
    };
    let (w1, w2, coll) = pair_outcomes(a1, a2, o1, o2, m);
    let mut row = vec![(Node1, w1), (Node2, w2)];
    for (i, c) in coll.into_iter().enumerate() {
        let d = i as i64 - m as i64;
        let dst = match d {
            0 => Aligned,
            d if d > 0 => Node1Deferred(d as usize),
            d => Node2Deferred((-d) as usize),
        };
        row.push((dst, c));
    }
    row.retain(|(_, p)| *p != 0.0);
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp_zero::cycle_transition_matrix;
    use crate::stationary::max_row_sum_error;

    fn rates(bd: f64, bs: f64, bc: f64) -> AttemptRates {
        AttemptRates::new(bd, bs, bc)
    }

    #[test]
    fn identity_chain_is_stochastic() {
        for n in 2..7 {
            let p = identity_chain(&rates(0.1, 0.6, 0.3), n).unwrap();
            assert_eq!(p.nrows(), 2 * n - 1);
            assert!(max_row_sum_error(&p) < 1e-12);
        }
    }

    #[test]
    fn identity_marginal_matches_cycle_chain() {
        let r = AttemptRates::uniform(0.2);
        let n = 5;
        let p = identity_chain(&r, n).unwrap();
        let c = cycle_transition_matrix(&r, n).unwrap();
        for i in 0..p.nrows() {
            let st = identity_state(i);
            for n2 in 1..=n {
                let mut s = p[(
                    i,
                    identity_index(AttackerIdentityState { n_a: n2, z: true }),
                )];
                if n2 < n {
                    s += p[(
                        i,
                        identity_index(AttackerIdentityState { n_a: n2, z: false }),
                    )];
                }
                assert!((s - c[(st.n_a - 1, n2 - 1)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn silent_others_keep_the_winner() {
        let p = identity_chain(&rates(0.0, 0.5, 0.3), 3).unwrap();
        let i = identity_index(AttackerIdentityState { n_a: 1, z: true });
        assert_eq!(p[(i, i)], 1.0);
    }

    #[test]
    fn es_boundary_and_bounds() {
        let r = rates(0.05, 0.4, 0.1);
        let es = expected_success_counts(&r, 3, 50).unwrap();
        let p = identity_chain(&r, 3).unwrap();
        for i in 0..5 {
            assert!((es[0][i] - p[(i, 0)]).abs() < 1e-15);
        }
        for l in 1..50 {
            for i in 0..5 {
                assert!(es[l][i] >= es[l - 1][i]);
                assert!(es[l][i] <= (l + 1) as f64);
            }
        }
    }

    #[test]
    fn equal_rates_are_fair() {
        for n in [2, 3, 6] {
            for l in [1, 5, 40] {
                assert_eq!(jain_index(&AttemptRates::uniform(0.1), n, l).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn capture_limit_halves_index() {
        let j = jain_index(&rates(1e-9, 1.0, 0.5), 2, 5).unwrap();
        assert!((j - 0.5).abs() < 1e-6);
    }

    #[test]
    fn jain_scale_invariant() {
        let a = jain_of(&[3.0, 1.0], &[1, 4]);
        let b = jain_of(&[6.0, 2.0], &[1, 4]);
        assert!((a - b).abs() < 1e-15);
        assert!(jain_of(&[0.0, 0.0], &[1, 1]).is_nan());
    }

    #[test]
    fn symmetric_two_nodes_run() {
        let r = AttemptRates::uniform(0.3);
        let sr = success_run_zero_delay(&r, 2).unwrap();
        assert!((sr.r11 - 0.5).abs() < 1e-15);
        assert!((sr.eu1 - 2.0).abs() < 1e-14);
        for m in 0..5 {
            let sd = success_run_delay(&r, m).unwrap();
            assert!((sd.r11 - 0.5).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn closed_form_matches_linear_system() {
        for (bd, bs, bc) in [(0.1, 0.5, 0.2), (0.02, 0.9, 0.6), (0.7, 0.3, 0.05)] {
            let r = rates(bd, bs, bc);
            let sr = success_run_zero_delay(&r, 2).unwrap();
            assert!((1.0 - sr.r11 - p12_two_nodes(bs, bd)).abs() < 1e-14);
        }
    }

    #[test]
    fn delay_run_reduces_at_zero_delay() {
        let r = rates(0.07, 0.45, 0.2);
        let a = success_run_delay(&r, 0).unwrap();
        let b = success_run_zero_delay(&r, 2).unwrap();
        assert!((a.r11 - b.r11).abs() < 1e-14);
    }

    #[test]
    fn silent_loser_gives_capped_run() {
        let sr = success_run_zero_delay(&rates(1e-12, 0.5, 0.3), 2).unwrap();
        assert!(sr.capped);
        assert_eq!(sr.eu1, EU1_CAP);
    }

    #[test]
    fn rate_ratio_box_holds() {
        for eps in [0.01, 0.05, 0.1, 0.2] {
            assert!(rate_ratio_box_violation(eps, 200) <= 1e-12, "eps={eps}");
        }
    }

    #[test]
    fn success_misalign_rows_are_stochastic() {
        use SuccessMisalignState::*;
        let r = rates(0.1, 0.6, 0.25);
        let m = 4;
        let mut states = vec![Node1, Node2, Aligned];
        states.extend((1..=m).map(Node1Deferred));
        states.extend((1..=m).map(Node2Deferred));
        for st in states {
            let s: f64 = success_misalign_row(st, &r, m).iter().map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-13, "{st:?}");
        }
    }

    #[test]
    fn success_misalign_rows_match_explicit_forms() {
        use SuccessMisalignState::*;
        let (bd, bs, bc) = (0.1, 0.6, 0.25);
        let r = rates(bd, bs, bc);
        let m = 3;
        let den_s = 1.0 - (1.0 - bd) * (1.0 - bs);
        let den_c = 1.0 - (1.0 - bc) * (1.0 - bc);
        let get = |from, to| {
            success_misalign_row(from, &r, m)
                .into_iter()
                .find(|(d, _)| *d == to)
                .map_or(0.0, |(_, p)| p)
        };
        let c0 = bc * (1.0 - bc).powi(4) / den_c;
        assert!((get(Node1, Node1) - bs * (1.0 - bd).powi(4) / den_s).abs() < 1e-15);
        assert!(
            (get(Node1, Node1Deferred(2)) - bs * (1.0 - bd).powi(2) * bd / den_s).abs() < 1e-15
        );
        assert!(
            (get(Node1, Node2Deferred(2)) - bd * (1.0 - bs).powi(2) * bs / den_s).abs() < 1e-15
        );
        assert!((get(Aligned, Node1) - c0).abs() < 1e-15);
        for k in 1..=m {
            assert!((get(Node1Deferred(k), Node1) - (1.0 - bc).powi(k as i32) * c0).abs() < 1e-15);
            let mut v = (1.0 - bc).powi(k as i32) * c0;
            for j in 1..=k {
                v += (1.0 - bc).powi(j as i32 - 1) * bc * (1.0 - bc).powi((j + m - k) as i32);
            }
            assert!((get(Node2Deferred(k), Node1) - v).abs() < 1e-15);
        }
    }
}

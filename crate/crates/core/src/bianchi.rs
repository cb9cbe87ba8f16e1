//! Classical decoupling fixed point: a node attempts at rate `G(gamma)` and
//! sees collisions with probability `Gamma(beta)`.

use crate::error::{invalid, Error, Result};
use crate::model::BackoffSchedule;

/// Form of the collision-probability map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaVariant {
    /// `1 - (1 - beta)^(n-1)`.
    #[default]
    Binomial,
    /// `1 - exp(-(n-1) beta)`.
    Poisson,
}

/// `G(gamma) = sum_k gamma^k / sum_k gamma^k b_k`.
pub fn attempt_rate_g(gamma: f64, schedule: &BackoffSchedule) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut g = 1.0;
    for b in schedule.means() {
        num += g;
        den += g * b;
        g *= gamma;
    }
    num / den
}

/// Collision probability seen by one node when each of the other `n - 1`
/// nodes attempts with probability `beta`.
pub fn collision_prob_gamma(beta: f64, n: usize, variant: GammaVariant) -> f64 {
    let others = n.saturating_sub(1) as f64;
    match variant {
        GammaVariant::Binomial => 1.0 - (1.0 - beta).powf(others),
        GammaVariant::Poisson => 1.0 - (-others * beta).exp(),
    }
}

/// Solution of the scalar fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub beta: f64,
    pub gamma: f64,
    /// `|gamma - Gamma(G(gamma))|` at the returned point.
    pub residual: f64,
}

/// Solves `gamma = Gamma(G(gamma))` with the binomial collision map.
pub fn solve_bianchi_fp(schedule: &BackoffSchedule, n: usize, tol: f64) -> Result<FixedPoint> {
    solve_bianchi_fp_with(schedule, n, GammaVariant::Binomial, tol)
}

/// Solves `gamma = Gamma(G(gamma))` by bisection on `gamma - Gamma(G(gamma))`,
/// which is non-positive at 0 and non-negative at 1.
pub fn solve_bianchi_fp_with(
    schedule: &BackoffSchedule,
    n: usize,
    variant: GammaVariant,
    tol: f64,
) -> Result<FixedPoint> {
    if n < 2 {
        return invalid("the fixed point needs n >= 2");
    }
    let f = |g: f64| g - collision_prob_gamma(attempt_rate_g(g, schedule), n, variant);
    let gamma = bisect(f, tol)?;
    let beta = attempt_rate_g(gamma, schedule);
    Ok(FixedPoint {
        beta,
        gamma,
        residual: f(gamma).abs(),
    })
}

/// Root of a function with `f(0) <= 0 <= f(1)` on `[0, 1]`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if f(lo) >= 0.0 {
        return Ok(lo);
    }
    if f(hi) <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let r = f(x).abs();
    if r <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            iterations: 200,
            residual: r,
        })
    }
}

/// Number of sign changes of `gamma - Gamma(G(gamma))` on a uniform grid of
/// `points` values in `[0, 1]`; 1 means a single crossing was detected.
pub fn sign_changes(
    schedule: &BackoffSchedule,
    n: usize,
    variant: GammaVariant,
    points: usize,
) -> usize {
    let f = |g: f64| g - collision_prob_gamma(attempt_rate_g(g, schedule), n, variant);
    let mut count = 0;
    let mut prev = f(0.0).signum();
    for i in 1..=points {
        let v = f(i as f64 / points as f64).signum();
        if v != 0.0 && prev != 0.0 && v != prev {
            count += 1;
        }
        if v != 0.0 {
            prev = v;
        }
    }
    count
}

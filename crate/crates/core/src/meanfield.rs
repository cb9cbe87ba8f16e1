//! Mean-field ODE for the fraction of nodes in each backoff stage.
//!
//! With per-stage attempt rates `p_k = 1 / b_k` and aggregate rate
//! `p . mu`, a node leaves stage `i` at rate `p_i`, moves to stage `i + 1`
//! after a collision (probability `1 - exp(-p . mu)`) and returns to stage 0
//! after a success or after any attempt at stage `K`.

use crate::bianchi::bisect;
use crate::error::{invalid, Error, Result};
use crate::model::BackoffSchedule;

/// A point on the probability simplex together with the stage rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
}

/// Stage rates `p_k = 1 / b_k` of a schedule.
pub fn stage_rates(schedule: &BackoffSchedule) -> Vec<f64> {
    schedule.means().iter().map(|b| 1.0 / b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-hand side of the mean-field ODE.
pub fn ode_rhs(mu: &[f64], p: &[f64]) -> Vec<f64> {
    let k = mu.len() - 1;
    let total = dot(p, mu);
    let ok = (-total).exp();
    let col = 1.0 - ok;
    let mut d = vec![0.0; mu.len()];
    d[0] = -mu[0] * p[0] + total * ok + p[k] * mu[k] * col;
    for i in 1..=k {
        d[i] = -mu[i] * p[i] + mu[i - 1] * p[i - 1] * col;
    }
    d
}

/// Stationary point of the ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub mu: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
}

/// Solves `beta = sum gamma^k / sum gamma^k / p_k`, `gamma = 1 - exp(-beta)`
/// and returns `mu_k` proportional to `gamma^k / p_k`.
pub fn ode_stationary_point(p: &[f64], tol: f64) -> Result<StationaryPoint> {
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0)) {
        return invalid("stage rates must be positive");
    }
    let beta_of = |g: f64| {
        let (mut num, mut den, mut gk) = (0.0, 0.0, 1.0);
        for &pk in p {
            num += gk;
            den += gk / pk;
            gk *= g;
        }
        num / den
    };
    let gamma = bisect(|g| g - (1.0 - (-beta_of(g)).exp()), tol)?;
    let beta = beta_of(gamma);
    let mut mu: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| gamma.powi(k as i32) / pk)
        .collect();
    let s: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= s);
    Ok(StationaryPoint { mu, beta, gamma })
}

/// Accepted integration steps with the distance to the stationary point.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    /// Euclidean norm `||mu(t) - mu*||`.
    pub norm_diff: Vec<f64>,
}

impl Trajectory {
    pub fn final_norm_diff(&self) -> f64 {
        *self.norm_diff.last().unwrap_or(&f64::NAN)
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Integrates the ODE from `mu0` to `t_end` with an adaptive Dormand-Prince
/// pair under absolute tolerance `tol`, recording every accepted step.
pub fn integrate_ode(mu0: &[f64], p: &[f64], t_end: f64, tol: f64) -> Result<Trajectory> {
    if mu0.len() != p.len() || mu0.is_empty() {
        return invalid("mu0 and p must have the same non-zero length");
    }
    if mu0.iter().any(|&x| x < 0.0) || (mu0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("mu0 must lie on the probability simplex");
    }
    let star = ode_stationary_point(p, 1e-14)?;
    let dim = mu0.len();
    let mut y = mu0.to_vec();
    let mut t = 0.0;
    let mut h = (0.1 / p.iter().cloned().fold(0.0, f64::max)).min(t_end.max(f64::MIN_POSITIVE));
    let mut traj = Trajectory::default();
    traj.t.push(t);
    traj.norm_diff.push(distance(&y, &star.mu));
    traj.mu.push(y.clone());
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        k[0] = ode_rhs(&y, p);
        for s in 1..7 {
            for d in 0..dim {
                tmp[d] = y[d] + h * (0..s).map(|j| A[s][j] * k[j][d]).sum::<f64>();
            }
            k[s] = ode_rhs(&tmp, p);
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; dim];
        for d in 0..dim {
            let (mut s5, mut s4) = (0.0, 0.0);
            for s in 0..7 {
                s5 += B5[s] * k[s][d];
                s4 += B4[s] * k[s][d];
            }
            y5[d] = y[d] + h * s5;
            err = err.max((h * (s5 - s4)).abs());
        }
        let ratio = err / tol;
        if ratio <= 1.0 {
            t += h;
            y = y5;
            traj.t.push(t);
            traj.norm_diff.push(distance(&y, &star.mu));
            traj.mu.push(y.clone());
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-12 * t.max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
    }
    Ok(traj)
}

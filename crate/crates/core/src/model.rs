//! Domain types shared by all analyses: backoff schedules, PHY timing,
//! attempt rates and performance reports.

use crate::error::{invalid, Result};

/// Parameters of the exponential window generator `W_k = min(p^(minBE+k), p^maxBE)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Derivation {
    pub min_be: u32,
    pub multiplier: u32,
    pub max_be: u32,
}

/// Per-stage contention windows `W_0..W_K`; a fresh backoff at stage `s` is
/// uniform on `{1, ..., W_s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackoffSchedule {
    windows: Vec<u32>,
    derivation: Option<Derivation>,
}

impl BackoffSchedule {
    /// Builds a schedule from explicit windows (one per stage, each `>= 1`).
    pub fn new(windows: Vec<u32>) -> Result<Self> {
        if windows.is_empty() {
            return invalid("a schedule needs at least one stage");
        }
        if let Some(s) = windows.iter().position(|&w| w == 0) {
            return invalid(format!("window of stage {s} is 0; windows must be >= 1"));
        }
        Ok(Self {
            windows,
            derivation: None,
        })
    }

    /// Builds `W_k = min(p^(minBE+k), p^maxBE)` for `k = 0..=K`.
    pub fn from_exponents(min_be: u32, multiplier: u32, max_be: u32, k: usize) -> Result<Self> {
        if multiplier < 1 {
            return invalid("multiplier must be >= 1");
        }
        if min_be > max_be {
            return invalid(format!("minBE {min_be} exceeds maxBE {max_be}"));
        }
        let cap = checked_pow(multiplier, max_be)?;
        let windows = (0..=k)
            .map(|s| {
                let e = min_be as u64 + s as u64;
                if e >= max_be as u64 {
                    Ok(cap)
                } else {
                    checked_pow(multiplier, e as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            windows,
            derivation: Some(Derivation {
                min_be,
                multiplier,
                max_be,
            }),
        })
    }

    /// Builds a schedule from mean backoffs `b_0..b_K` through `W = 2b - 1`.
    /// Every `2b - 1` must be a positive integer.
    pub fn from_means(k: usize, means: &[f64]) -> Result<Self> {
        if means.len() != k + 1 {
            return invalid(format!(
                "expected {} means for K={k}, got {}",
                k + 1,
                means.len()
            ));
        }
        let windows = means
            .iter()
            .map(|&b| {
                let w = 2.0 * b - 1.0;
                if !(w >= 1.0) || (w - w.round()).abs() > 1e-9 || w > u32::MAX as f64 {
                    invalid(format!(
                        "mean backoff {b} does not correspond to an integer window"
                    ))
                } else {
                    Ok(w.round() as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(windows)
    }

    /// 802.11b defaults: `minBE=5, p=2, maxBE=10, K=6`.
    pub fn ieee80211b() -> Self {
        Self::from_exponents(5, 2, 10, 6).expect("default parameters are valid")
    }

    /// Validation schedule 1: `K=7`, `b_k = 3^k`.
    pub fn test_sequence_1() -> Self {
        Self::new((0..=7).map(|k| 2 * 3u32.pow(k) - 1).collect()).expect("valid")
    }

    /// Validation schedule 2: `K=7`, `b_0..b_3 = 1.5`, `b_4..b_7 = 64`.
    pub fn test_sequence_2() -> Self {
        Self::new(vec![2, 2, 2, 2, 127, 127, 127, 127]).expect("valid")
    }

    /// Validation schedule 3: `K=1`, `b = [1.5, 32.5]`.
    pub fn test_sequence_3() -> Self {
        Self::new(vec![2, 64]).expect("valid")
    }

    /// Validation schedule 4: `K=6`, `b_0..b_3 = 1.5`, `b_4..b_6 = 32.5`.
    pub fn test_sequence_4() -> Self {
        Self::new(vec![2, 2, 2, 2, 64, 64, 64]).expect("valid")
    }

    /// Long retry schedule: `K=400`, `b_0..b_100 = 1`, `b_101..b_400 = 2`.
    pub fn long_retry() -> Self {
        Self::new((0..=400).map(|k| if k <= 100 { 1 } else { 3 }).collect()).expect("valid")
    }

    /// Large-variability schedule: `K=7`, `b_0..b_3 = 1`, `b_4..b_7 = 64`.
    pub fn large_variability() -> Self {
        Self::new(vec![1, 1, 1, 1, 127, 127, 127, 127]).expect("valid")
    }

    /// Retry limit `K` (number of stages minus one).
    pub fn k(&self) -> usize {
        self.windows.len() - 1
    }

    /// Number of stages, `K + 1`.
    pub fn stages(&self) -> usize {
        self.windows.len()
    }

    pub fn windows(&self) -> &[u32] {
        &self.windows
    }

    pub fn derivation(&self) -> Option<Derivation> {
        self.derivation
    }

    /// Window `W_s` of stage `s`.
    pub fn window_for_stage(&self, s: usize) -> Result<u32> {
        match self.windows.get(s) {
            Some(&w) => Ok(w),
            None => invalid(format!("stage {s} out of range 0..={}", self.k())),
        }
    }

    /// Unchecked window lookup for internal loops.
    pub(crate) fn w(&self, s: usize) -> usize {
        self.windows[s] as usize
    }

    /// Mean backoff `b_s = (1 + W_s) / 2`.
    pub fn mean(&self, s: usize) -> f64 {
        (1.0 + self.windows[s] as f64) / 2.0
    }

    /// All means `b_0..b_K`.
    pub fn means(&self) -> Vec<f64> {
        (0..self.stages()).map(|s| self.mean(s)).collect()
    }

    /// Window of the last stage, `W_K`.
    pub fn last_window(&self) -> u32 {
        self.windows[self.k()]
    }

    /// Largest window over all stages.
    pub fn max_window(&self) -> u32 {
        self.windows.iter().copied().max().unwrap_or(1)
    }

    /// Next stage after a collision at stage `s`, wrapping to 0 after `K`.
    pub fn next_stage(&self, s: usize) -> usize {
        (s + 1) % self.stages()
    }
}

fn checked_pow(base: u32, exp: u32) -> Result<u32> {
    match base.checked_pow(exp) {
        Some(v) => Ok(v),
        None => invalid(format!("window {base}^{exp} overflows")),
    }
}

/// Slot length and frame/overhead durations, all in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyTiming {
    /// Backoff slot duration.
    pub sigma: f64,
    /// Data frame duration.
    pub t_d: f64,
    pub ack: f64,
    pub phy_hdr: f64,
    pub sifs: f64,
    pub difs: f64,
    /// Receive-to-transmit turnaround time.
    pub t_o: f64,
    /// Extra idle time after a collision (EIFS surplus), 0 by default.
    pub eifs: f64,
    /// Transmitter-to-transmitter propagation delay.
    pub delta: f64,
    /// Transmitter-to-receiver propagation delay.
    pub delta_r: f64,
}

impl Default for PhyTiming {
    /// 802.11b at 2 Mbps with a 1028-byte frame and no propagation delay.
    fn default() -> Self {
        Self {
            sigma: 20.0,
            t_d: 4112.0,
            ack: 56.0,
            phy_hdr: 192.0,
            sifs: 10.0,
            difs: 50.0,
            t_o: 10.0,
            eifs: 0.0,
            delta: 0.0,
            delta_r: 0.0,
        }
    }
}

impl PhyTiming {
    /// Timing with every overhead zero, slot 1 and data duration `t_d`.
    pub fn bare(t_d: f64) -> Self {
        Self {
            sigma: 1.0,
            t_d,
            ack: 0.0,
            phy_hdr: 0.0,
            sifs: 0.0,
            difs: 0.0,
            t_o: 0.0,
            eifs: 0.0,
            delta: 0.0,
            delta_r: 0.0,
        }
    }

    /// Copy with propagation delays `delta = delta_r = d`.
    pub fn with_delay(mut self, d: f64) -> Self {
        self.delta = d;
        self.delta_r = d;
        self
    }

    /// Copy with slot duration `sigma`.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Checks that every duration is finite and non-negative and the slot is positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma", self.sigma),
            ("t_d", self.t_d),
            ("ack", self.ack),
            ("phy_hdr", self.phy_hdr),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("t_o", self.t_o),
            ("eifs", self.eifs),
            ("delta", self.delta),
            ("delta_r", self.delta_r),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return invalid(format!(
                    "{name} must be a finite non-negative duration, got {v}"
                ));
            }
        }
        if self.sigma <= 0.0 {
            return invalid("slot duration must be positive");
        }
        Ok(())
    }

    /// Propagation delay in whole slots, `m = floor(delta / sigma)`.
    pub fn m(&self) -> usize {
        (self.delta / self.sigma + 1e-12).floor() as usize
    }

    /// Transmitter-to-receiver delay in slots (fractional).
    pub fn m_r(&self) -> f64 {
        self.delta_r / self.sigma
    }

    /// Duration of a successful transmission cycle after the idle slots.
    pub fn success_cycle_overhead(&self, delayed: bool) -> f64 {
        let base =
            self.t_d + self.ack + 2.0 * self.phy_hdr + 2.0 * self.t_o + self.sifs + self.difs;
        if delayed {
            base + 2.0 * self.delta_r
        } else {
            base
        }
    }

    /// Duration of a collision cycle after the idle slots.
    pub fn collision_cycle_overhead(&self, delayed: bool) -> f64 {
        let base = self.t_d + self.phy_hdr + self.t_o + self.sifs + self.difs + self.eifs;
        if delayed {
            base + self.delta
        } else {
            base
        }
    }
}

/// State-dependent per-slot attempt probabilities.
///
/// `beta_s`, `beta_c` and `beta_d` apply to a node whose previous cycle was
/// its own success, its own collision, or an interruption of its backoff.
/// `beta` is the overall attempt rate per backoff slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptRates {
    pub beta_d: f64,
    pub beta_s: f64,
    pub beta_c: f64,
    pub beta: f64,
}

impl AttemptRates {
    /// All four rates equal to `b`.
    pub fn uniform(b: f64) -> Self {
        Self {
            beta_d: b,
            beta_s: b,
            beta_c: b,
            beta: b,
        }
    }

    pub fn new(beta_d: f64, beta_s: f64, beta_c: f64) -> Self {
        Self {
            beta_d,
            beta_s,
            beta_c,
            beta: f64::NAN,
        }
    }

    /// Rate of a group of `n_a` nodes that attempted together last cycle:
    /// `beta_s` for a lone (successful) attacker, `beta_c` otherwise.
    pub fn last_attackers(&self, n_a: usize) -> f64 {
        if n_a == 1 {
            self.beta_s
        } else {
            self.beta_c
        }
    }

    pub(crate) fn check_probabilities(&self) -> Result<()> {
        for (name, v) in [
            ("beta_d", self.beta_d),
            ("beta_s", self.beta_s),
            ("beta_c", self.beta_c),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} = {v} is not a probability"));
            }
        }
        Ok(())
    }
}

/// Origin of a [`PerformanceReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Simulation,
    MrpAnalysis,
    Bianchi,
    MeanField,
}

/// Optional fairness metrics attached to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessSummary {
    pub frame_len: usize,
    pub jain: f64,
    pub eu1: f64,
}

/// Collision probability, throughput and attempt rates from one method.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub gamma: f64,
    pub theta: f64,
    pub rates: AttemptRates,
    pub source: Source,
    pub fairness: Option<FairnessSummary>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_generator_matches_80211b() {
        let s = BackoffSchedule::ieee80211b();
        assert_eq!(s.windows(), &[32, 64, 128, 256, 512, 1024, 1024]);
        assert_eq!(s.window_for_stage(0).unwrap(), 32);
        assert_eq!(s.window_for_stage(6).unwrap(), 1024);
        assert!(s.window_for_stage(7).is_err());
    }

    #[test]
    fn explicit_window_lookup() {
        let s = BackoffSchedule::new(vec![2, 64]).unwrap();
        assert_eq!(s.window_for_stage(1).unwrap(), 64);
        assert_eq!(s.k(), 1);
    }

    #[test]
    fn min_be_zero_schedule() {
        let s = BackoffSchedule::from_exponents(0, 2, 10, 6).unwrap();
        assert_eq!(s.windows(), &[1, 2, 4, 8, 16, 32, 64]);
    }

    #[test]
    fn means_roundtrip() {
        let s = BackoffSchedule::from_means(7, &[1., 3., 9., 27., 81., 243., 729., 2187.]).unwrap();
        assert_eq!(s, BackoffSchedule::test_sequence_1());
        assert_eq!(s.windows(), &[1, 5, 17, 53, 161, 485, 1457, 4373]);
        assert!(BackoffSchedule::from_means(0, &[1.25]).is_err());
        assert!(BackoffSchedule::from_means(1, &[1.5]).is_err());
        let t = BackoffSchedule::from_means(1, &[1.5, 32.5]).unwrap();
        assert_eq!(t.means(), vec![1.5, 32.5]);
    }

    #[test]
    fn named_sequences() {
        assert_eq!(
            BackoffSchedule::test_sequence_2().means(),
            vec![1.5, 1.5, 1.5, 1.5, 64., 64., 64., 64.]
        );
        assert_eq!(
            BackoffSchedule::test_sequence_4().means(),
            vec![1.5, 1.5, 1.5, 1.5, 32.5, 32.5, 32.5]
        );
        let lr = BackoffSchedule::long_retry();
        assert_eq!(lr.k(), 400);
        assert_eq!(lr.mean(100), 1.0);
        assert_eq!(lr.mean(101), 2.0);
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(BackoffSchedule::new(vec![]).is_err());
        assert!(BackoffSchedule::new(vec![4, 0]).is_err());
        assert!(BackoffSchedule::from_exponents(11, 2, 10, 6).is_err());
    }

    #[test]
    fn overheads() {
        let t = PhyTiming::bare(1.0);
        assert_eq!(t.success_cycle_overhead(false), 1.0);
        assert_eq!(t.collision_cycle_overhead(false), 1.0);
        let d = PhyTiming {
            delta_r: 200.0,
            ..t
        };
        assert_eq!(d.success_cycle_overhead(true), 401.0);
        let c = PhyTiming { delta: 100.0, ..t };
        assert_eq!(c.collision_cycle_overhead(true), 101.0);
    }

    #[test]
    fn collision_shorter_than_success_by_default() {
        let t = PhyTiming::default().with_delay(140.0);
        assert!(t.collision_cycle_overhead(true) < t.success_cycle_overhead(true));
        assert_eq!(t.m(), 7);
        assert_eq!(t.m_r(), 7.0);
    }

    #[test]
    fn m_is_floor_of_ratio() {
        let t = PhyTiming::default().with_delay(60.0);
        assert_eq!(t.with_sigma(21.0).m(), 2);
        assert_eq!(t.with_sigma(30.0).m(), 2);
        assert_eq!(t.with_sigma(31.0).m(), 1);
        assert_eq!(t.with_sigma(61.0).m(), 0);
    }

    #[test]
    fn timing_validation() {
        assert!(PhyTiming::default().validate().is_ok());
        assert!(PhyTiming {
            sigma: 0.0,
            ..PhyTiming::default()
        }
        .validate()
        .is_err());
        assert!(PhyTiming {
            ack: -1.0,
            ..PhyTiming::default()
        }
        .validate()
        .is_err());
    }
}

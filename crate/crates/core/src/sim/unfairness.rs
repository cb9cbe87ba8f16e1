//! Short-term collision probabilities over windows of consecutive cycles.

use crate::error::{invalid, Result};

use super::exact::CycleKind;
use super::stats::TraceRecord;

/// Per-node collision probability in each window, plus the long-run mean.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfairnessSeries {
    pub window: usize,
    /// `per_node[i][j]` is `C/A` of node `i` in window `j`; `None` when the
    /// node made no attempt in that window.
    pub per_node: Vec<Vec<Option<f64>>>,
    /// `(1/n) sum_i C(i)/A(i)` over the whole trace, for nodes that attempted.
    pub long_run_mean: f64,
}

impl UnfairnessSeries {
    /// Sample variance of node `i`'s windowed values around the long-run mean.
    pub fn spread(&self, i: usize) -> f64 {
        let v: Vec<f64> = self.per_node[i].iter().flatten().copied().collect();
        if v.is_empty() {
            return f64::NAN;
        }
        v.iter()
            .map(|x| (x - self.long_run_mean).powi(2))
            .sum::<f64>()
            / v.len() as f64
    }
}

/// Splits the trace into non-overlapping blocks of `window` cycles (a
/// trailing partial block is dropped) and reports each node's collision
/// fraction per block.
pub fn windowed_unfairness(
    trace: &[TraceRecord],
    n: usize,
    window: usize,
) -> Result<UnfairnessSeries> {
    if trace.is_empty() {
        return invalid("trace is empty");
    }
    if window == 0 {
        return invalid("window must be >= 1");
    }
    let mut per_node = vec![Vec::new(); n];
    let mut total_a = vec![0u64; n];
    let mut total_c = vec![0u64; n];
    for block in trace.chunks(window) {
        let mut a = vec![0u64; n];
        let mut c = vec![0u64; n];
        for r in block {
            for &i in &r.attackers {
                if i >= n {
                    return invalid(format!("node id {i} exceeds n={n}"));
                }
                a[i] += 1;
                if r.kind == CycleKind::Collision {
                    c[i] += 1;
                }
            }
        }
        for i in 0..n {
            total_a[i] += a[i];
            total_c[i] += c[i];
        }
        if block.len() == window {
            for i in 0..n {
                per_node[i].push((a[i] > 0).then(|| c[i] as f64 / a[i] as f64));
            }
        }
    }
    let means: Vec<f64> = (0..n)
        .filter(|&i| total_a[i] > 0)
        .map(|i| total_c[i] as f64 / total_a[i] as f64)
        .collect();
    let long_run_mean = if means.is_empty() {
        f64::NAN
    } else {
        means.iter().sum::<f64>() / means.len() as f64
    };
    Ok(UnfairnessSeries {
        window,
        per_node,
        long_run_mean,
    })
}

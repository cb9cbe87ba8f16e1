//! Small numeric helpers.

/// Binomial coefficient `C(n, k)` as `f64` (exact for the sizes used here).
pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// `x^k` for a non-negative integer exponent, with `0^0 = 1`.
pub(crate) fn powi(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}

/// Probability that exactly `y` nodes attempt in one slot when `a` nodes
/// attempt independently w.p. `pa` and `b` nodes w.p. `pb`.
pub(crate) fn exactly(y: usize, a: usize, pa: f64, b: usize, pb: f64) -> f64 {
    let mut total = 0.0;
    let lo = y.saturating_sub(b);
    let hi = y.min(a);
    for i in lo..=hi {
        let j = y - i;
        total += binom(a, i)
            * powi(pa, i)
            * powi(1.0 - pa, a - i)
            * binom(b, j)
            * powi(pb, j)
            * powi(1.0 - pb, b - j);
    }
    if lo > hi {
        0.0
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), 10.0);
        assert_eq!(binom(5, 0), 1.0);
        assert_eq!(binom(3, 4), 0.0);
        assert_eq!(binom(40, 20), 137846528820.0);
    }

    #[test]
    fn exactly_is_a_distribution() {
        let s: f64 = (0..=7).map(|y| exactly(y, 3, 0.3, 4, 0.6)).sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert_eq!(exactly(8, 3, 0.3, 4, 0.6), 0.0);
        assert!((exactly(0, 2, 0.5, 0, 0.9) - 0.25).abs() < 1e-15);
    }
}

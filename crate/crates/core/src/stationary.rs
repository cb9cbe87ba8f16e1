//! Stationary distributions of finite, irreducible Markov chains.
//!
//! The default solver replaces one balance equation of `pi (P - I) = 0` with
//! the normalization `sum(pi) = 1` and solves the resulting system by LU
//! decomposition. Large chains, or systems whose direct solution leaves a
//! residual above tolerance, fall back to power iteration on the lazy chain
//! `(I + P) / 2`, which is aperiodic whenever `P` is irreducible.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Default residual tolerance for [`stationary_distribution`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Chains larger than this are solved by power iteration.
const DIRECT_LIMIT: usize = 3000;

/// Tolerance on row sums when validating a transition matrix.
const ROW_SUM_TOL: f64 = 1e-9;

/// Dense row-stochastic matrix.
pub type Matrix = DMatrix<f64>;

/// Sparse row-major transition matrix for large chains.
#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds `v` to entry `(i, j)`; zero values are skipped.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if let Some(e) = self.rows[i].iter_mut().find(|e| e.0 == j) {
            e.1 += v;
        } else {
            self.rows[i].push((j, v));
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `x P` for a row vector `x`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                y[j] += x[i] * v;
            }
        }
        y
    }
}

/// Largest absolute deviation of any row sum from 1.
pub fn max_row_sum_error(p: &Matrix) -> f64 {
    (0..p.nrows())
        .map(|i| (p.row(i).sum() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn residual(pi: &[f64], p: &Matrix) -> f64 {
    let n = pi.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += pi[i] * p[(i, j)];
        }
        worst = worst.max((s - pi[j]).abs());
    }
    worst
}

/// Sparse counterpart of [`residual`].
pub fn residual_sparse(pi: &[f64], p: &SparseMatrix) -> f64 {
    p.left_mul(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn check_stochastic(p: &Matrix) -> Result<()> {
    if p.nrows() != p.ncols() || p.nrows() == 0 {
        return invalid(format!(
            "transition matrix must be square and non-empty, got {}x{}",
            p.nrows(),
            p.ncols()
        ));
    }
    for i in 0..p.nrows() {
        let row = p.row(i);
        if row.iter().any(|v| !v.is_finite() || *v < -1e-14) {
            return invalid(format!("row {i} has a negative or non-finite entry"));
        }
        let s = row.sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic { row: i, sum: s });
        }
    }
    Ok(())
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Singular("stationary vector has zero mass".into()));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(v)
}

/// Stationary distribution `pi` of a row-stochastic matrix: `pi >= 0`,
/// `sum(pi) = 1` and `||pi P - pi||_inf <= tol`.
pub fn stationary_distribution(p: &Matrix, tol: f64) -> Result<Vec<f64>> {
    check_stochastic(p)?;
    let n = p.nrows();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if n <= DIRECT_LIMIT {
        if let Some(pi) = direct_solve(p) {
            let pi = normalize(pi)?;
            let r = residual(&pi, p);
            if r <= tol {
                return Ok(pi);
            }
            return power_refine(p, pi, tol);
        }
    }
    power_refine(p, vec![1.0 / n as f64; n], tol)
}

fn direct_solve(p: &Matrix) -> Option<Vec<f64>> {
    let n = p.nrows();
    let mut a = p.transpose();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x.iter().copied().collect())
}

fn power_refine(p: &Matrix, mut pi: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    let n = p.nrows();
    let pt = p.transpose();
    let max_iter = 200_000;
    let mut r = f64::INFINITY;
    for _ in 0..max_iter {
        let x = DVector::from_vec(pi.clone());
        let y = &pt * &x;
        let next: Vec<f64> = (0..n).map(|i| 0.5 * (pi[i] + y[i])).collect();
        pi = normalize(next)?;
        r = residual(&pi, p);
        if r <= tol {
            return Ok(pi);
        }
    }
    Err(Error::Singular(format!(
        "reducible or ill-conditioned chain, residual {r:e}"
    )))
}

/// Stationary distribution of a sparse chain by lazy power iteration.
pub fn stationary_sparse(p: &SparseMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 0 {
        return invalid("empty chain");
    }
    for i in 0..n {
        let s = p.row_sum(i);
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic { row: i, sum: s });
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut r = f64::INFINITY;
    for _ in 0..max_iter {
        let y = p.left_mul(&pi);
        let next: Vec<f64> = pi.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        pi = normalize(next)?;
        r = residual_sparse(&pi, p);
        if r <= tol {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Matrix {
        let n = rows.len();
        Matrix::from_fn(n, n, |i, j| rows[i][j])
    }

    #[test]
    fn symmetric_two_state() {
        let pi = stationary_distribution(&m(&[&[0.5, 0.5], &[0.5, 0.5]]), DEFAULT_TOL).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn periodic_flip() {
        let pi = stationary_distribution(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn birth_death_closed_form() {
        // Detailed balance gives pi_i proportional to (p/q)^i.
        let (p, q) = (0.3, 0.5);
        let a = m(&[&[1.0 - p, p, 0.0], &[q, 1.0 - p - q, p], &[0.0, q, 1.0 - q]]);
        let pi = stationary_distribution(&a, DEFAULT_TOL).unwrap();
        let r = p / q;
        let z = 1.0 + r + r * r;
        for (i, v) in pi.iter().enumerate() {
            assert!((v - r.powi(i as i32) / z).abs() < 1e-14);
        }
    }

    #[test]
    fn random_chain_direct_vs_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let mut a = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() + 0.01);
        for i in 0..n {
            let s = a.row(i).sum();
            for j in 0..n {
                a[(i, j)] /= s;
            }
        }
        let direct = stationary_distribution(&a, DEFAULT_TOL).unwrap();
        assert!(residual(&direct, &a) < 1e-10);
        let power = power_refine(&a, vec![0.2; 5], 1e-13).unwrap();
        for i in 0..n {
            assert!((direct[i] - power[i]).abs() < 1e-11);
        }
        let mut sp = SparseMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                sp.add(i, j, a[(i, j)]);
            }
        }
        let s = stationary_sparse(&sp, 1e-13, 100_000).unwrap();
        for i in 0..n {
            assert!((direct[i] - s[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_non_stochastic() {
        let r = stationary_distribution(&m(&[&[0.5, 0.4], &[0.5, 0.5]]), DEFAULT_TOL);
        assert!(matches!(r, Err(Error::NotStochastic { row: 0, .. })));
    }

    #[test]
    fn sparse_accumulates() {
        let mut s = SparseMatrix::new(2);
        s.add(0, 1, 0.25);
        s.add(0, 1, 0.25);
        s.add(0, 0, 0.5);
        s.add(1, 0, 1.0);
        s.add(1, 1, 0.0);
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.nnz(), 3);
        assert_eq!(s.to_dense()[(1, 0)], 1.0);
    }
}

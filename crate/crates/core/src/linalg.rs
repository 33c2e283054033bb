//! Thin helpers over nalgebra shared by the diagnostics and solvers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Columns `idx` of `x`.
pub fn columns(x: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(x.nrows(), idx.len(), |i, j| x[(i, idx[j])])
}

/// Principal submatrix `g[idx, idx]`.
pub fn principal(g: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])])
}

/// Block `g[rows, cols]`.
pub fn block(g: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eig_extremes(m: &Mat) -> (f64, f64) {
    if m.nrows() == 0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    if m.nrows() == 1 {
        return (m[(0, 0)], m[(0, 0)]);
    }
    let ev = m.clone().symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn power_iteration(g: &Mat, iters: usize) -> f64 {
    let p = g.nrows();
    if p == 0 {
        return 0.0;
    }
    let mut v = Vector::from_fn(p, |i, _| 1.0 + 0.01 * i as f64);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let w = g * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        est = v.dot(&w);
        v = w / nw;
    }
    est.max((g * &v).dot(&v))
}

/// Solves `a x = b` for symmetric positive definite `a`; `None` when the
/// factorization fails or the smallest pivot is negligible.
pub fn solve_spd(a: &Mat, b: &Vector) -> Option<Vector> {
    let scale = (0..a.nrows()).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let ch = a.clone().cholesky()?;
    let l = ch.l_dirty();
    let min_pivot = (0..a.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-12 * scale {
        return None;
    }
    Some(ch.solve(b))
}

/// k-subsets of {0..n} in lexicographic order.
pub struct Combinations {
    n: usize,
    cur: Vec<usize>,
    first: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Combinations {
        Combinations { n, cur: (0..k).collect(), first: true, done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(self.cur.clone());
        }
        let k = self.cur.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                return Some(self.cur.clone());
            }
        }
        self.done = true;
        None
    }
}

/// Binomial coefficient, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Σ_{k ≤ m} C(n, k), saturating.
pub fn subsets_up_to(n: usize, m: usize) -> u128 {
    (0..=m.min(n)).fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

pub fn norm_q(v: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if q == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

//! Dense primal simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible under `b ≥ 0`, so the slack basis starts phase two
//! directly. Pivoting uses Dantzig's rule and switches to Bland's rule after a
//! run of degenerate pivots.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
}

const EPS: f64 = 1e-11;

/// `a` is row-major with `b.len()` rows and `c.len()` columns.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> LpOutcome {
    let (m, n) = (b.len(), c.len());
    debug_assert_eq!(a.len(), m * n);
    debug_assert!(b.iter().all(|&v| v >= 0.0));
    let w = n + m + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        t[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        t[i * w + n + i] = 1.0;
        t[i * w + w - 1] = b[i];
    }
    // objective row holds −c so that optimality is "no negative entry"
    for j in 0..n {
        t[m * w + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let scale = c.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut degenerate_run = 0usize;
    let max_pivots = 50 * (m + n) + 1000;
    for _ in 0..max_pivots {
        let obj = &t[m * w..m * w + n + m];
        let bland = degenerate_run > m + 5;
        let mut enter = None;
        let mut most = -EPS * scale;
        for (j, &v) in obj.iter().enumerate() {
            if v < most {
                enter = Some(j);
                if bland {
                    break;
                }
                most = v;
            }
        }
        let Some(e) = enter else {
            let mut x = vec![0.0; n];
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    x[bi] = t[i * w + w - 1];
                }
            }
            let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            return LpOutcome::Optimal { x, value };
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let col = t[i * w + e];
            if col > EPS {
                let ratio = t[i * w + w - 1] / col;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return LpOutcome::Unbounded;
        };
        degenerate_run = if ratio <= 1e-14 { degenerate_run + 1 } else { 0 };
        let pv = t[r * w + e];
        for j in 0..w {
            t[r * w + j] /= pv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i * w + e];
            if f != 0.0 {
                for j in 0..w {
                    t[i * w + j] -= f * t[r * w + j];
                }
            }
        }
        basis[r] = e;
    }
    // pivot budget exhausted: report the current basic solution
    let mut x = vec![0.0; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[i * w + w - 1].max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

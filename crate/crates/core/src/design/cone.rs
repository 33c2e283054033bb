//! Infima over the ℓ1 cone ‖u_{S^c}‖₁ ≤ ξ‖u_S‖₁ and over penalty cones.
//!
//! Exact routes (small p):
//! - CIF₁ is a maximum of ‖u‖₁ under ‖Gu‖∞ ≤ 1, one LP per sign orthant.
//! - c∞ = inf ‖Gu‖∞/‖u‖∞ is one LP per coordinate and sign pattern of u_S;
//!   together with CIF₁ it certifies CIF_q ≥ CIF₁^{1/q} c∞^{1−1/q}.
//! - RE₁ is a convex QP per sign pattern of u_S, certified by its Frank–Wolfe gap.
//! - RE₂ is the smallest eigenvalue over the faces of the cone that carries an
//!   eigenvector inside the cone.
//!
//! Everything else is sampling followed by local polishing, which only ever
//! yields an upper bound on the infimum.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{random_signs, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, Combinations, Mat, Vector};
use crate::lp::{self, LpOutcome};
use crate::penalty::{Family, Penalty};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConeMode {
    /// computed by enumeration; `value` and `lower` agree up to rounding
    Exact,
    /// `lower` certified, `value` the best point found
    Bracketed,
    /// `value` from sampling only, no certificate
    Sampled,
}

/// Estimate of an infimum: `value` is the best (smallest) ratio found, `lower`
/// a certified lower bound (0 when nothing is certified).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConeEstimate {
    pub value: f64,
    pub lower: f64,
    pub mode: ConeMode,
}

impl ConeEstimate {
    fn exact(v: f64) -> ConeEstimate {
        ConeEstimate { value: v, lower: v, mode: ConeMode::Exact }
    }
    fn sampled(v: f64) -> ConeEstimate {
        ConeEstimate { value: v, lower: 0.0, mode: ConeMode::Sampled }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConeOptions {
    /// largest p handled by enumeration
    pub exact_max_p: usize,
    /// use the sampling route even when enumeration is possible
    pub force_sampled: bool,
    pub samples: usize,
    /// sign orthants polished by LP in sampled mode
    pub polish: usize,
    pub seed: u64,
}

impl Default for ConeOptions {
    fn default() -> Self {
        ConeOptions { exact_max_p: 10, force_sampled: false, samples: 100_000, polish: 2048, seed: 0 }
    }
}

impl ConeOptions {
    fn exact_for(&self, p: usize) -> bool {
        !self.force_sampled && p <= self.exact_max_p
    }
}

fn validate(g: &Mat, q: f64, xi: f64, s: &SupportSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("support must be nonempty".into()));
    }
    if s.indices().last().is_some_and(|&j| j >= g.nrows()) {
        return Err(Error::Range("support index outside the design".into()));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!("xi must be positive, got {xi}")));
    }
    if !(1.0..=8.0).contains(&q) {
        return Err(Error::Range(format!("q must lie in [1, 8], got {q}")));
    }
    Ok(())
}

fn sign(mask: u64, i: usize) -> f64 {
    if (mask >> i) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// max obj·v over v ≥ 0 with |G[:, cols] diag(signs) v| ≤ 1 and, when given,
/// the cone row Σ_{off} v − ξ Σ_{on} v ≤ 0 (`on` indexed like `cols`).
fn orthant_lp(g: &Mat, cols: &[usize], signs: &[f64], cone: Option<(&[bool], f64)>, obj: &[f64]) -> LpOutcome {
    let p = g.nrows();
    let m = cols.len();
    let rows = 2 * p + usize::from(cone.is_some());
    let mut a = vec![0.0; rows * m];
    let mut b = vec![1.0; rows];
    for i in 0..p {
        for (c, &j) in cols.iter().enumerate() {
            let v = g[(i, j)] * signs[c];
            a[2 * i * m + c] = v;
            a[(2 * i + 1) * m + c] = -v;
        }
    }
    if let Some((on, xi)) = cone {
        let r = 2 * p;
        for c in 0..m {
            a[r * m + c] = if on[c] { -xi } else { 1.0 };
        }
        b[r] = 0.0;
    }
    lp::maximize(obj, &a, &b)
}

/// (max ‖v‖₁, best ‖v‖_q found by successive linearization) over one orthant;
/// infinite when the orthant contains a null direction of G.
fn orthant_norms(g: &Mat, cols: &[usize], signs: &[f64], cone: Option<(&[bool], f64)>, q: f64) -> (f64, f64) {
    let mut w = vec![1.0; cols.len()];
    let mut first = None;
    let mut best = 0.0f64;
    for _ in 0..40 {
        let x = match orthant_lp(g, cols, signs, cone, &w) {
            LpOutcome::Unbounded => return (f64::INFINITY, f64::INFINITY),
            LpOutcome::Optimal { x, .. } => x,
        };
        if first.is_none() {
            first = Some(linalg::norm_q(&x, 1.0));
        }
        let nq = linalg::norm_q(&x, q);
        if q == 1.0 || nq <= best * (1.0 + 1e-12) {
            best = best.max(nq);
            break;
        }
        best = nq;
        let scale = linalg::norm_inf(&x);
        w = x.iter().map(|v| (v / scale).powf(q - 1.0)).collect();
    }
    (first.unwrap_or(0.0), best)
}

// full-length sign vector for an orthant mask with coordinate 0 fixed to +
fn orthant_signs(mask: u64, len: usize) -> Vec<f64> {
    (0..len).map(|i| sign(mask << 1, i)).collect()
}

/// Exact CIF₁ together with the best ‖u‖_q ratio for the cone over `s`.
fn cif_orthants(g: &Mat, q: f64, xi: f64, s: &SupportSet) -> (f64, f64) {
    let p = g.nrows();
    let cols: Vec<usize> = (0..p).collect();
    let on = s.mask(p);
    let k = s.len() as f64;
    let (mut m1, mut mq) = (0.0f64, 0.0f64);
    for mask in 0..(1u64 << (p - 1)) {
        let signs = orthant_signs(mask, p);
        let (a, b) = orthant_norms(g, &cols, &signs, Some((&on, xi)), q);
        m1 = m1.max(a);
        mq = mq.max(b);
        if m1.is_infinite() {
            return (0.0, 0.0);
        }
    }
    (k / m1, k.powf(1.0 / q) / mq)
}

/// c∞(ξ, S) = inf ‖Gu‖∞/‖u‖∞ over the ℓ1 cone, by one LP per (sign of u_S, coordinate).
pub fn c_inf(g: &Mat, xi: f64, s: &SupportSet) -> Result<f64> {
    validate(g, 1.0, xi, s)?;
    let p = g.nrows();
    let k = s.len();
    let sc = s.complement(p);
    let r = p - k;
    let nv = k + 2 * r;
    let rows = 2 * p + 1;
    let mut best = 0.0f64;
    for mask in 0..(1u64 << k) {
        let mut a = vec![0.0; rows * nv];
        let mut b = vec![1.0; rows];
        for i in 0..p {
            for (c, &j) in s.indices().iter().enumerate() {
                let v = g[(i, j)] * sign(mask, c);
                a[2 * i * nv + c] = v;
                a[(2 * i + 1) * nv + c] = -v;
            }
            for (t, &j) in sc.indices().iter().enumerate() {
                let v = g[(i, j)];
                a[2 * i * nv + k + t] = v;
                a[(2 * i + 1) * nv + k + t] = -v;
                a[2 * i * nv + k + r + t] = -v;
                a[(2 * i + 1) * nv + k + r + t] = v;
            }
        }
        for c in 0..nv {
            a[2 * p * nv + c] = if c < k { -xi } else { 1.0 };
        }
        b[2 * p] = 0.0;
        for j in 0..p {
            let mut obj = vec![0.0; nv];
            match s.indices().binary_search(&j) {
                Ok(c) => obj[c] = sign(mask, c),
                Err(_) => {
                    let t = sc.indices().binary_search(&j).unwrap_or(0);
                    obj[k + t] = 1.0;
                    obj[k + r + t] = -1.0;
                }
            }
            match lp::maximize(&obj, &a, &b) {
                LpOutcome::Unbounded => return Ok(0.0),
                LpOutcome::Optimal { value, .. } => best = best.max(value),
            }
        }
    }
    Ok(if best > 0.0 { 1.0 / best } else { f64::INFINITY })
}

// inf ‖Gu‖∞/‖u‖∞ over u supported on `t`
fn c_inf_subspace(g: &Mat, t: &[usize]) -> f64 {
    let p = g.nrows();
    let m = t.len();
    let nv = 2 * m;
    let mut a = vec![0.0; 2 * p * nv];
    let b = vec![1.0; 2 * p];
    for i in 0..p {
        for (c, &j) in t.iter().enumerate() {
            let v = g[(i, j)];
            a[2 * i * nv + c] = v;
            a[2 * i * nv + m + c] = -v;
            a[(2 * i + 1) * nv + c] = -v;
            a[(2 * i + 1) * nv + m + c] = v;
        }
    }
    let mut best = 0.0f64;
    for c in 0..m {
        let mut obj = vec![0.0; nv];
        obj[c] = 1.0;
        obj[m + c] = -1.0;
        match lp::maximize(&obj, &a, &b) {
            LpOutcome::Unbounded => return 0.0,
            LpOutcome::Optimal { value, .. } => best = best.max(value),
        }
    }
    if best > 0.0 {
        1.0 / best
    } else {
        f64::INFINITY
    }
}

fn interpolate(cif1: f64, cinf: f64, q: f64) -> f64 {
    if q == 1.0 {
        return cif1;
    }
    cif1.powf(1.0 / q) * cinf.min(f64::MAX).powf(1.0 - 1.0 / q)
}

/// CIF_q(ξ, S) = inf |S|^{1/q}‖X⊤Xu‖∞/(n‖u‖_q) over the cone, from the Gram matrix.
pub fn cif(g: &Mat, q: f64, xi: f64, s: &SupportSet, opts: &ConeOptions) -> Result<ConeEstimate> {
    validate(g, q, xi, s)?;
    if !opts.exact_for(g.nrows()) {
        return Ok(ConeEstimate::sampled(cif_sampled(g, q, xi, s, opts)));
    }
    let (cif1, value) = cif_orthants(g, q, xi, s);
    if q == 1.0 {
        return Ok(ConeEstimate::exact(cif1));
    }
    let lower = interpolate(cif1, c_inf(g, xi, s)?, q);
    Ok(ConeEstimate { value, lower: lower.min(value), mode: ConeMode::Bracketed })
}

/// min over |A| = k of CIF_q(ξ, A): exact value for q = 1, certified lower bound for q > 1.
pub fn cif_min_over_supports(g: &Mat, q: f64, xi: f64, k: usize, opts: &ConeOptions) -> Result<ConeEstimate> {
    let p = g.nrows();
    if k == 0 || k > p {
        return Err(Error::Range(format!("support size {k} outside 1..={p}")));
    }
    if !opts.exact_for(p) {
        return Err(Error::OracleRefused(format!("p = {p} is above the enumeration limit {}", opts.exact_max_p)));
    }
    let (mut value, mut lower) = (f64::INFINITY, f64::INFINITY);
    for a in Combinations::new(p, k) {
        let s = SupportSet::new(a, p)?;
        let e = cif(g, q, xi, &s, opts)?;
        value = value.min(e.value);
        lower = lower.min(e.lower);
    }
    let mode = if q == 1.0 { ConeMode::Exact } else { ConeMode::Bracketed };
    Ok(ConeEstimate { value, lower, mode })
}

fn ratio(g: &Mat, u: &[f64], k: usize, q: f64) -> f64 {
    let v = Vector::from_column_slice(u);
    let gu = g * &v;
    (k as f64).powf(1.0 / q) * gu.amax() / linalg::norm_q(u, q)
}

// Exponential spacings: a uniform point of the simplex of the given total.
fn simplex_point<R: Rng>(rng: &mut R, len: usize, total: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = e.iter().sum();
    e.iter().map(|x| total * x / sum).collect()
}

// A point of the slice {σ_S-orthant, Σ σ_j u_j = 1 on S, ‖u_{S^c}‖₁ ≤ ξ}.
fn slice_point<R: Rng>(rng: &mut R, s: &SupportSet, p: usize, xi: f64, signs_s: &[f64]) -> Vec<f64> {
    let k = s.len();
    let mut u = vec![0.0; p];
    let head = simplex_point(rng, k, 1.0);
    for (c, &j) in s.indices().iter().enumerate() {
        u[j] = signs_s[c] * head[c];
    }
    let sc = s.complement(p);
    // the trailing slack coordinate makes the off-support part fill the ball
    let tail = simplex_point(rng, sc.len() + 1, xi);
    let sg = random_signs(rng, sc.len());
    for (t, &j) in sc.indices().iter().enumerate() {
        u[j] = sg[t] * tail[t];
    }
    u
}

fn cif_sampled(g: &Mat, q: f64, xi: f64, s: &SupportSet, opts: &ConeOptions) -> f64 {
    let p = g.nrows();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut best = f64::INFINITY;
    let mut orthants: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    for _ in 0..opts.samples {
        let sg = random_signs(&mut rng, s.len());
        let u = slice_point(&mut rng, s, p, xi, &sg);
        let r = ratio(g, &u, s.len(), q);
        best = best.min(r);
        let flip = u[0] < 0.0;
        let key: Vec<bool> = u.iter().map(|&v| (v < 0.0) != flip).collect();
        let e = orthants.entry(key).or_insert(f64::INFINITY);
        *e = e.min(r);
    }
    let mut ranked: Vec<(f64, Vec<bool>)> = orthants.into_iter().map(|(k, v)| (v, k)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let cols: Vec<usize> = (0..p).collect();
    let on = s.mask(p);
    let kq = (s.len() as f64).powf(1.0 / q);
    for (_, key) in ranked.into_iter().take(opts.polish) {
        let signs: Vec<f64> = key.iter().map(|&neg| if neg { -1.0 } else { 1.0 }).collect();
        let (_, mq) = orthant_norms(g, &cols, &signs, Some((&on, xi)), q);
        best = best.min(kq / mq);
    }
    best
}

fn project_simplex(y: &mut [f64], total: f64) {
    let mut u: Vec<f64> = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - total) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for v in y.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

fn project_l1_ball(y: &mut [f64], radius: f64) {
    if y.iter().map(|v| v.abs()).sum::<f64>() <= radius {
        return;
    }
    let mut a: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    project_simplex(&mut a, radius);
    for (v, m) in y.iter_mut().zip(a) {
        *v = if *v < 0.0 { -m } else { m };
    }
}

// Euclidean projection onto the slice used for RE₁ and sampled RE₂.
fn project_slice(u: &mut [f64], on: &[usize], off: &[usize], signs_s: &[f64], xi: f64) {
    let mut head: Vec<f64> = on.iter().zip(signs_s).map(|(&j, s)| s * u[j]).collect();
    project_simplex(&mut head, 1.0);
    for (c, &j) in on.iter().enumerate() {
        u[j] = signs_s[c] * head[c];
    }
    let mut tail: Vec<f64> = off.iter().map(|&j| u[j]).collect();
    project_l1_ball(&mut tail, xi);
    for (t, &j) in off.iter().enumerate() {
        u[j] = tail[t];
    }
}

/// (min z⊤Gz found, certified lower bound) over one slice, by accelerated
/// projected gradient with restarts.
fn re1_slice(g: &Mat, lmax: f64, s: &SupportSet, off: &[usize], signs_s: &[f64], xi: f64) -> (f64, f64) {
    let p = g.nrows();
    let on = s.indices();
    let step = 1.0 / (2.0 * lmax.max(1e-300));
    let mut z = vec![0.0; p];
    for (c, &j) in on.iter().enumerate() {
        z[j] = signs_s[c] / on.len() as f64;
    }
    let f = |z: &[f64]| {
        let v = Vector::from_column_slice(z);
        (g * &v).dot(&v)
    };
    let gap_of = |z: &[f64]| {
        let v = Vector::from_column_slice(z);
        let gr = 2.0 * (g * &v);
        let lin: f64 = gr.dot(&v);
        let head = on.iter().zip(signs_s).map(|(&j, s)| s * gr[j]).fold(f64::INFINITY, f64::min);
        let tail = off.iter().map(|&j| gr[j].abs()).fold(0.0, f64::max);
        (lin - head + xi * tail).max(0.0)
    };
    let mut y = z.clone();
    let mut t = 1.0f64;
    let mut fz = f(&z);
    let mut gap = gap_of(&z);
    for it in 0..60_000 {
        let v = Vector::from_column_slice(&y);
        let gr = 2.0 * (g * &v);
        let mut zn: Vec<f64> = (0..p).map(|i| y[i] - step * gr[i]).collect();
        project_slice(&mut zn, on, off, signs_s, xi);
        let fzn = f(&zn);
        if fzn > fz {
            // adaptive restart
            y.clone_from(&z);
            t = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        for i in 0..p {
            y[i] = zn[i] + (t - 1.0) / tn * (zn[i] - z[i]);
        }
        t = tn;
        z = zn;
        fz = fzn;
        if it % 25 == 0 {
            gap = gap_of(&z);
            if gap <= 1e-14 + 1e-11 * fz {
                break;
            }
        }
    }
    gap = gap.min(gap_of(&z));
    (fz, (fz - gap).max(0.0))
}

fn re1(g: &Mat, xi: f64, s: &SupportSet) -> ConeEstimate {
    let p = g.nrows();
    let k = s.len();
    let off = s.complement(p);
    let (_, lmax) = linalg::eig_extremes(g);
    let (mut best, mut lower) = (f64::INFINITY, f64::INFINITY);
    for mask in 0..(1u64 << (k - 1)) {
        let signs = orthant_signs(mask, k);
        let (v, lo) = re1_slice(g, lmax, s, off.indices(), &signs, xi);
        best = best.min(v);
        lower = lower.min(lo);
    }
    let kf = k as f64;
    let value = (kf * best.max(0.0)).sqrt();
    let lower = (kf * lower).sqrt();
    let mode = if value - lower <= 1e-9 * (1.0 + value) { ConeMode::Exact } else { ConeMode::Bracketed };
    ConeEstimate { value, lower, mode }
}

// Householder completion: columns spanning the orthogonal complement of `a`.
fn complement_basis(a: &[f64]) -> Mat {
    let t = a.len();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v: Vec<f64> = a.iter().map(|x| x / na).collect();
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let nv2: f64 = v.iter().map(|x| x * x).sum();
    Mat::from_fn(t, t - 1, |i, j| {
        let c = j + 1;
        let id = if i == c { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[c] / nv2
    })
}

fn in_cone(u: &[f64], on: &[bool], xi: f64) -> bool {
    let (mut a, mut b) = (0.0, 0.0);
    for (j, &x) in u.iter().enumerate() {
        if on[j] {
            b += x.abs();
        } else {
            a += x.abs();
        }
    }
    b > 0.0 && a <= xi * b + 1e-9 * (a + b)
}

fn re2_exact(g: &Mat, xi: f64, s: &SupportSet) -> f64 {
    let p = g.nrows();
    let on = s.mask(p);
    let mut best = f64::INFINITY;
    for mask in 1u64..(1u64 << p) {
        let t: Vec<usize> = (0..p).filter(|&j| (mask >> j) & 1 == 1).collect();
        if !t.iter().any(|&j| on[j]) {
            continue;
        }
        let gt = linalg::principal(g, &t);
        let mut u = vec![0.0; p];
        // faces where the cone constraint is slack
        let eig = gt.clone().symmetric_eigen();
        for c in 0..t.len() {
            if eig.eigenvalues[c] >= best {
                continue;
            }
            u.iter_mut().for_each(|x| *x = 0.0);
            for (r, &j) in t.iter().enumerate() {
                u[j] = eig.eigenvectors[(r, c)];
            }
            if in_cone(&u, &on, xi) {
                best = eig.eigenvalues[c];
            }
        }
        // faces on the boundary Σ_{S^c}|u| = ξΣ_S|u| with a fixed sign pattern
        if t.len() < 2 || t.iter().all(|&j| on[j]) {
            continue;
        }
        for sm in 0..(1u64 << (t.len() - 1)) {
            let sg = orthant_signs(sm, t.len());
            let a: Vec<f64> = t.iter().zip(&sg).map(|(&j, &sj)| if on[j] { -xi * sj } else { sj }).collect();
            let qb = complement_basis(&a);
            let m = qb.transpose() * &gt * &qb;
            let e = m.symmetric_eigen();
            for c in 0..t.len() - 1 {
                if e.eigenvalues[c] >= best {
                    continue;
                }
                let ut = &qb * e.eigenvectors.column(c);
                let scale = ut.amax();
                let fits = |d: f64| ut.iter().zip(&sg).all(|(x, sj)| d * sj * x >= -1e-9 * scale);
                if fits(1.0) || fits(-1.0) {
                    best = e.eigenvalues[c];
                }
            }
        }
    }
    best.max(0.0)
}

// Projected gradient on the Rayleigh quotient over each slice, several starts.
fn re2_sampled(g: &Mat, xi: f64, s: &SupportSet, opts: &ConeOptions) -> f64 {
    let p = g.nrows();
    let k = s.len();
    let off = s.complement(p);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let (_, lmax) = linalg::eig_extremes(g);
    let rq = |u: &[f64]| {
        let v = Vector::from_column_slice(u);
        (g * &v).dot(&v) / v.dot(&v)
    };
    let starts = (opts.samples / 1000).clamp(8, 64);
    let mut best = f64::INFINITY;
    for mask in 0..(1u64 << (k - 1)) {
        let signs = orthant_signs(mask, k);
        for st in 0..starts + k {
            let mut u = if st < k {
                let mut e = vec![0.0; p];
                e[s.indices()[st]] = signs[st];
                e
            } else {
                slice_point(&mut rng, s, p, xi, &signs)
            };
            let mut f = rq(&u);
            let mut step = 1.0 / (2.0 * lmax.max(1e-12));
            for _ in 0..400 {
                let v = Vector::from_column_slice(&u);
                let nn = v.dot(&v);
                let gr = (g * &v - &v * f) * (2.0 / nn);
                let mut accepted = false;
                while step > 1e-12 {
                    let mut w: Vec<f64> = (0..p).map(|i| u[i] - step * nn * gr[i]).collect();
                    project_slice(&mut w, s.indices(), off.indices(), &signs, xi);
                    let fw = rq(&w);
                    if fw < f - 1e-15 {
                        u = w;
                        f = fw;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            best = best.min(f);
        }
    }
    best.max(0.0)
}

/// (RE₁, RE₂) for the cone over `s`.
pub fn re_factors(g: &Mat, xi: f64, s: &SupportSet, opts: &ConeOptions) -> Result<(ConeEstimate, ConeEstimate)> {
    validate(g, 1.0, xi, s)?;
    let r1 = re1(g, xi, s);
    let r2 = if opts.exact_for(g.nrows()) {
        ConeEstimate::exact(re2_exact(g, xi, s).sqrt())
    } else {
        ConeEstimate::sampled(re2_sampled(g, xi, s, opts).sqrt())
    };
    Ok((r1, r2))
}

/// Size of the largest off-support set allowed by the ℓ0 cone: max{b : b < ξ|S|}.
pub fn l0_cone_budget(xi: f64, k: usize, p: usize) -> usize {
    let b = (xi * k as f64).ceil() - 1.0;
    (b.max(0.0) as usize).min(p - k)
}

/// RIF_q for the ℓ0 penalty: the cone is the union of the coordinate subspaces
/// of S ∪ B with |B| = max{b : b < ξ|S|}.
fn rif_l0(g: &Mat, q: f64, xi: f64, s: &SupportSet) -> Result<ConeEstimate> {
    let p = g.nrows();
    let k = s.len();
    let sc = s.complement(p);
    let b = l0_cone_budget(xi, k, p);
    let (mut m1, mut mq) = (0.0f64, 0.0f64);
    let mut lower = f64::INFINITY;
    let kf = k as f64;
    for pick in Combinations::new(sc.len(), b) {
        let extra: Vec<usize> = pick.iter().map(|&i| sc.indices()[i]).collect();
        let t = s.union(&SupportSet::new(extra, p)?);
        let cols = t.indices();
        let (mut t1, mut tq) = (0.0f64, 0.0f64);
        for mask in 0..(1u64 << (cols.len() - 1)) {
            let (a, c) = orthant_norms(g, cols, &orthant_signs(mask, cols.len()), None, q);
            t1 = t1.max(a);
            tq = tq.max(c);
            if t1.is_infinite() {
                return Ok(ConeEstimate::exact(0.0));
            }
        }
        m1 = m1.max(t1);
        mq = mq.max(tq);
        if q > 1.0 {
            lower = lower.min(interpolate(kf / t1, c_inf_subspace(g, cols), q));
        }
    }
    if q == 1.0 {
        return Ok(ConeEstimate::exact(kf / m1));
    }
    let value = kf.powf(1.0 / q) / mq;
    Ok(ConeEstimate { value, lower: lower.min(value), mode: ConeMode::Bracketed })
}

// Random points of the penalty cone at random scales, then compass search.
fn rif_sampled(g: &Mat, pen: &Penalty, q: f64, xi: f64, s: &SupportSet, opts: &ConeOptions) -> f64 {
    let p = g.nrows();
    let k = s.len();
    let on = s.mask(p);
    let sc = s.complement(p);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let lam = pen.lambda();
    let side = |u: &[f64]| {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..p {
            if on[j] {
                b += pen.rho(u[j]);
            } else {
                a += pen.rho(u[j]);
            }
        }
        (a, b)
    };
    let inside = |u: &[f64]| {
        let (a, b) = side(u);
        b > 0.0 && a <= xi * b
    };
    let n_samples = (opts.samples / 5).max(200);
    let mut pool: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..n_samples {
        let scale = lam * 10f64.powf(rng.random_range(-3.0..3.0));
        let mut u = vec![0.0; p];
        for &j in s.indices() {
            let m = -(1.0 - rng.random::<f64>()).ln();
            u[j] = if rng.random::<bool>() { scale * m } else { -scale * m };
        }
        let (_, rhs) = side(&u);
        let target = xi * rhs * rng.random::<f64>();
        let count = rng.random_range(0..=sc.len());
        let mut dir = vec![0.0; p];
        for i in rand::seq::index::sample(&mut rng, sc.len(), count).into_vec() {
            let t = sc.indices()[i];
            let m = -(1.0 - rng.random::<f64>()).ln();
            dir[t] = if rng.random::<bool>() { m } else { -m };
        }
        let along = |tau: f64| dir.iter().map(|d| pen.rho(tau * d)).sum::<f64>();
        let (mut lo, mut hi) = (0.0, scale * 1e6);
        if count > 0 && along(hi) > target {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if along(mid) > target { hi = mid } else { lo = mid }
            }
        } else if count > 0 {
            lo = hi;
        }
        for j in 0..p {
            if !on[j] {
                u[j] = lo * dir[j];
            }
        }
        if !inside(&u) {
            continue;
        }
        let r = ratio(g, &u, k, q);
        pool.push((r, u));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(16);
    let mut best = pool.first().map_or(f64::INFINITY, |x| x.0);
    for (mut r, mut u) in pool {
        let mut h = 0.25 * linalg::norm_inf(&u);
        let floor = 1e-7 * h;
        while h > floor {
            let mut moved = false;
            for j in 0..p {
                for d in [h, -h] {
                    u[j] += d;
                    let nr = if inside(&u) { ratio(g, &u, k, q) } else { f64::INFINITY };
                    if nr < r {
                        r = nr;
                        moved = true;
                    } else {
                        u[j] -= d;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        best = best.min(r);
    }
    best
}

/// RIF_q(ξ, S) = inf |S|^{1/q}‖Gu‖∞/‖u‖_q over ‖ρ(u_{S^c})‖₁ ≤ ξ‖ρ(u_S)‖₁.
///
/// ℓ1 reduces to CIF and ℓ0 to a union of coordinate subspaces. For the other
/// families the value is the smallest of the sampled penalty cone, the ℓ1 cone
/// (the small-scale limit when ρ̇(0+) is finite) and the ℓ0 cone (the large-scale
/// limit for bounded penalties); the certified lower bound is min_{|A|=|S|} CIF_q(ξ, A).
pub fn rif(g: &Mat, pen: &Penalty, q: f64, xi: f64, s: &SupportSet, opts: &ConeOptions) -> Result<ConeEstimate> {
    validate(g, q, xi, s)?;
    let p = g.nrows();
    let exact = opts.exact_for(p);
    match pen.family() {
        Family::L1 => cif(g, q, xi, s, opts),
        Family::L0 if exact => rif_l0(g, q, xi, s),
        Family::L0 => Ok(ConeEstimate::sampled(rif_sampled(g, pen, q, xi, s, opts))),
        _ => {
            let mut value = rif_sampled(g, pen, q, xi, s, opts);
            if pen.rho_dot_zero().is_ok() {
                value = value.min(cif(g, q, xi, s, opts)?.value);
            }
            if !exact {
                return Ok(ConeEstimate::sampled(value));
            }
            if pen.is_bounded() {
                value = value.min(rif_l0(g, q, xi, s)?.value);
            }
            let lower = cif_min_over_supports(g, q, xi, s.len(), opts)?.lower;
            Ok(ConeEstimate { value, lower, mode: ConeMode::Bracketed })
        }
    }
}

/// Certified lower bound on RIF_q(ξ, S) for use inside bounds. Refuses above
/// the enumeration limit rather than fall back to a sampled value.
pub fn rif_lower(g: &Mat, pen: &Penalty, q: f64, xi: f64, s: &SupportSet, opts: &ConeOptions) -> Result<f64> {
    validate(g, q, xi, s)?;
    let p = g.nrows();
    if !opts.exact_for(p) {
        return Err(Error::OracleRefused(format!("certified cone factors need p <= {}, got {p}", opts.exact_max_p)));
    }
    Ok(match pen.family() {
        Family::L1 => cif(g, q, xi, s, opts)?.lower,
        Family::L0 => rif_l0(g, q, xi, s)?.lower,
        _ => cif_min_over_supports(g, q, xi, s.len(), opts)?.lower,
    })
}

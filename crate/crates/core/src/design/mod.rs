//! Design matrices, supports and the regularity quantities of a design.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::penalty::Penalty;

pub mod cone;

pub use cone::{ConeEstimate, ConeMode, ConeOptions};

/// Default cap on the number of enumerated supports.
pub const ENUMERATION_CAP: u128 = 200_000;

/// An n×p design; after `normalize_columns` every column has norm √n.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: Mat,
    scales: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(x: Mat) -> Result<DesignMatrix> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Dimension(format!("empty design {}x{}", x.nrows(), x.ncols())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design has non-finite entries".into()));
        }
        let p = x.ncols();
        Ok(DesignMatrix { x, scales: alloc::vec![1.0; p] })
    }

    /// Builds from row-major entries.
    pub fn from_rows(n: usize, p: usize, entries: &[f64]) -> Result<DesignMatrix> {
        if entries.len() != n * p {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * p, entries.len())));
        }
        DesignMatrix::new(Mat::from_row_slice(n, p, entries))
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn x(&self) -> &Mat {
        &self.x
    }
    /// Cumulative factors applied to each column by normalization.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Rescales every column to ‖x_j‖₂ = √n.
    pub fn normalize_columns(&self) -> Result<DesignMatrix> {
        let target = (self.n() as f64).sqrt();
        let mut x = self.x.clone();
        let mut scales = self.scales.clone();
        for j in 0..self.p() {
            let norm = x.column(j).norm();
            if norm == 0.0 {
                return Err(Error::DegenerateDesign(format!("column {j} is zero")));
            }
            let f = target / norm;
            if (f - 1.0).abs() > 1e-15 {
                x.column_mut(j).scale_mut(f);
                scales[j] *= f;
            }
        }
        Ok(DesignMatrix { x, scales })
    }

    pub fn is_normalized(&self) -> bool {
        let target = (self.n() as f64).sqrt();
        (0..self.p()).all(|j| (self.x.column(j).norm() - target).abs() <= 1e-12 * target)
    }

    /// X⊤X/n.
    pub fn gram(&self) -> Mat {
        self.x.tr_mul(&self.x) / self.n() as f64
    }

    /// X b.
    pub fn apply(&self, b: &[f64]) -> Vector {
        &self.x * Vector::from_column_slice(b)
    }

    /// X⊤ r / n.
    pub fn correlate(&self, r: &Vector) -> Vector {
        self.x.tr_mul(r) / self.n() as f64
    }
}

/// A sorted set of distinct column indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<SupportSet> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("support indices must be distinct".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= p {
                return Err(Error::Range(format!("index {last} outside 0..{p}")));
            }
        }
        Ok(SupportSet { indices })
    }

    pub fn empty() -> SupportSet {
        SupportSet { indices: Vec::new() }
    }

    pub fn full(p: usize) -> SupportSet {
        SupportSet { indices: (0..p).collect() }
    }

    /// {j : |b_j| > zero_tol}.
    pub fn from_beta(beta: &[f64], zero_tol: f64) -> SupportSet {
        SupportSet { indices: (0..beta.len()).filter(|&j| beta[j].abs() > zero_tol).collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
    pub fn len(&self) -> usize {
        self.indices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn complement(&self, p: usize) -> SupportSet {
        SupportSet { indices: (0..p).filter(|j| !self.contains(*j)).collect() }
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v: Vec<usize> = self.indices.iter().chain(other.indices.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet { indices: v }
    }

    /// |self ∖ other|.
    pub fn minus_count(&self, other: &SupportSet) -> usize {
        self.indices.iter().filter(|j| !other.contains(**j)).count()
    }

    pub fn mask(&self, p: usize) -> Vec<bool> {
        let mut m = alloc::vec![false; p];
        for &j in &self.indices {
            m[j] = true;
        }
        m
    }
}

/// Extreme eigenvalues over supports of size m.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseEigen {
    pub m: usize,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    /// false when the values come from sampled supports and local swaps
    pub exact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub cap: u128,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { cap: ENUMERATION_CAP, seed: 0, restarts: 200 }
    }
}

/// κ₋(m), κ₊(m) from the Gram matrix X⊤X/n.
pub fn sparse_eigenvalues(gram: &Mat, m: usize, opts: &EigenOptions) -> Result<SparseEigen> {
    let p = gram.nrows();
    if m == 0 || m > p {
        return Err(Error::Range(format!("sparse eigenvalue order {m} outside 1..={p}")));
    }
    if linalg::binomial(p, m) <= opts.cap {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in linalg::Combinations::new(p, m) {
            let (l, h) = linalg::eig_extremes(&linalg::principal(gram, &a));
            lo = lo.min(l);
            hi = hi.max(h);
        }
        return Ok(SparseEigen { m, kappa_minus: lo, kappa_plus: hi, exact: true });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..opts.restarts {
        let start: Vec<usize> = sample(&mut rng, p, m).into_vec();
        lo = lo.min(swap_search(gram, start.clone(), true));
        hi = hi.max(swap_search(gram, start, false));
    }
    Ok(SparseEigen { m, kappa_minus: lo, kappa_plus: hi, exact: false })
}

// Greedy single swaps improving the extreme eigenvalue of the principal submatrix.
fn swap_search(gram: &Mat, mut a: Vec<usize>, minimize: bool) -> f64 {
    let p = gram.nrows();
    let val = |a: &[usize]| {
        let (l, h) = linalg::eig_extremes(&linalg::principal(gram, a));
        if minimize { l } else { -h }
    };
    let mut cur = val(&a);
    loop {
        let mut improved = false;
        for i in 0..a.len() {
            for j in 0..p {
                if a.contains(&j) {
                    continue;
                }
                let old = a[i];
                a[i] = j;
                let v = val(&a);
                if v < cur - 1e-14 {
                    cur = v;
                    improved = true;
                } else {
                    a[i] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    if minimize { cur } else { -cur }
}

/// κ± for m = 1..=m_max.
pub fn sparse_eigen_table(gram: &Mat, m_max: usize, opts: &EigenOptions) -> Result<Vec<SparseEigen>> {
    (1..=m_max.min(gram.nrows())).map(|m| sparse_eigenvalues(gram, m, opts)).collect()
}

/// Lookup helper over a κ table with the conventions κ₊(0) = 0 and κ₋(0) = ∞.
pub fn kappa_plus(table: &[SparseEigen], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    table[m.min(table.len()) - 1].kappa_plus
}

pub fn kappa_minus(table: &[SparseEigen], m: usize) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    table[m.min(table.len()) - 1].kappa_minus
}

/// θ₁* = ‖(X_S⊤X_S/n)⁻¹ s‖∞ and θ₂* = ‖X_{S^c}⊤X_S(X_S⊤X_S)⁻¹ s‖∞.
pub fn irrepresentable(gram: &Mat, s: &SupportSet, signs: &[f64]) -> Result<(f64, f64)> {
    if signs.len() != s.len() {
        return Err(Error::Dimension("one sign per support index".into()));
    }
    let m = linalg::principal(gram, s.indices());
    let w = linalg::solve_spd(&m, &Vector::from_column_slice(signs))
        .ok_or_else(|| Error::Rank("X_S is not of full column rank".into()))?;
    let sc = s.complement(gram.nrows());
    let cross = linalg::block(gram, sc.indices(), s.indices()) * &w;
    Ok((w.amax(), if cross.is_empty() { 0.0 } else { cross.amax() }))
}

// sup over the box |v_j| ≤ r of ‖W ρ̇(c + v)‖∞, separable in the coordinates.
fn box_sup(w: &Mat, pen: &Penalty, centre: &[f64], r: f64) -> f64 {
    let ranges: Vec<(f64, f64)> = centre.iter().map(|&c| pen.derivative_range(c - r, c + r)).collect();
    let mut best = 0.0f64;
    for i in 0..w.nrows() {
        let mut up = 0.0;
        let mut down = 0.0;
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            let c = w[(i, j)];
            if c > 0.0 {
                up += c * hi;
                down += c * lo;
            } else if c < 0.0 {
                up += c * lo;
                down += c * hi;
            }
        }
        best = best.max(up).max(-down);
    }
    best
}

/// (θ₁, θ₂) for a penalty at the oracle coefficients `beta_o` (over S).
pub fn generalized_theta(gram: &Mat, pen: &Penalty, s: &SupportSet, beta_o: &[f64]) -> Result<(f64, f64)> {
    if beta_o.len() != s.len() {
        return Err(Error::Dimension("beta_o must be indexed by S".into()));
    }
    let k = s.len();
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let m = linalg::principal(gram, s.indices());
    let inv = m
        .clone()
        .cholesky()
        .filter(|_| linalg::solve_spd(&m, &Vector::zeros(k)).is_some())
        .ok_or_else(|| Error::Rank("X_S is not of full column rank".into()))?
        .inverse();
    let sc = s.complement(gram.nrows());
    let w2 = linalg::block(gram, sc.indices(), s.indices()) * &inv;
    let ls = pen.threshold_level();
    let feasible = |theta: f64| box_sup(&inv, pen, beta_o, theta * ls) <= theta * ls;
    let theta2 = |theta1: f64| if w2.nrows() == 0 { 0.0 } else { box_sup(&w2, pen, beta_o, theta1 * ls) / ls };
    if feasible(0.0) {
        return Ok((0.0, theta2(0.0)));
    }
    const CAP: f64 = 1e3;
    if !feasible(CAP) {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let (mut lo, mut hi) = (0.0, CAP);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) { hi = mid } else { lo = mid }
    }
    if !feasible(hi) {
        return Err(Error::NonConvergence { lo, hi });
    }
    Ok((hi, theta2(hi)))
}

/// Lower bound of CIF_q(ξ, S) in terms of κ±, maximized over admissible ℓ;
/// `None` when no ℓ with 1 ≤ ℓ ≤ (p − |S|)/5 exists or q > 2.
pub fn cif_sparse_eigen_bound(table: &[SparseEigen], p: usize, q: f64, xi: f64, k: usize) -> Option<f64> {
    if !(1.0..=2.0).contains(&q) || k == 0 {
        return None;
    }
    let max_l = (p - k.min(p)) / 5;
    if max_l == 0 {
        return None;
    }
    let kf = k as f64;
    let mut best: Option<f64> = None;
    for l in 1..=max_l {
        if k + 5 * l > table.len() {
            break;
        }
        let lf = l as f64;
        let num = kappa_minus(table, k + l) - (xi / 2.0) * (kf / lf).sqrt() * kappa_plus(table, k + 5 * l);
        let den = (1.0 + xi).powf(2.0 / q - 1.0)
            * (1.0 + xi * xi * kf / (4.0 * lf)).powf(1.0 - 1.0 / q)
            * (1.0 + lf / kf).sqrt();
        let v = num / den;
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    best
}

/// One inequality of the factor comparison with its slack (lhs − rhs).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorInequality {
    pub name: alloc::string::String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Every quantity of a regularity report for one (ξ, S).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityReport {
    pub n: usize,
    pub p: usize,
    pub xi: f64,
    pub support: SupportSet,
    pub kappa: Vec<SparseEigen>,
    pub re1: Option<ConeEstimate>,
    pub re2: Option<ConeEstimate>,
    pub cif: Vec<(f64, ConeEstimate)>,
    pub rif: Vec<(f64, ConeEstimate)>,
    pub theta1_star: Option<f64>,
    pub theta2_star: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub cif_lower_bound: Option<f64>,
    /// true when any value came from sampling rather than enumeration
    pub heuristic: bool,
}

#[derive(Debug, Clone)]
pub struct DiagnoseRequest {
    pub m_max: usize,
    pub xi: f64,
    pub support: SupportSet,
    pub q_list: Vec<f64>,
    pub penalty: Option<Penalty>,
    /// signs of β over S (for θ₁*, θ₂*) and oracle coefficients (for θ₁, θ₂)
    pub signs: Option<Vec<f64>>,
    pub beta_o: Option<Vec<f64>>,
    pub eigen: EigenOptions,
    pub cone: ConeOptions,
}

pub fn diagnose(design: &DesignMatrix, req: &DiagnoseRequest) -> Result<RegularityReport> {
    let g = design.gram();
    let p = design.p();
    let kappa = sparse_eigen_table(&g, req.m_max.max(1).min(p), &req.eigen)?;
    let mut heuristic = kappa.iter().any(|k| !k.exact);
    let s = &req.support;
    let (mut re1, mut re2, mut cif, mut rif) = (None, None, Vec::new(), Vec::new());
    if !s.is_empty() {
        let (a, b) = cone::re_factors(&g, req.xi, s, &req.cone)?;
        heuristic |= a.mode == ConeMode::Sampled || b.mode == ConeMode::Sampled;
        re1 = Some(a);
        re2 = Some(b);
        for &q in &req.q_list {
            let c = cone::cif(&g, q, req.xi, s, &req.cone)?;
            heuristic |= c.mode == ConeMode::Sampled;
            cif.push((q, c));
            if let Some(pen) = &req.penalty {
                let r = cone::rif(&g, pen, q, req.xi, s, &req.cone)?;
                heuristic |= r.mode == ConeMode::Sampled;
                rif.push((q, r));
            }
        }
    }
    let (mut t1s, mut t2s, mut t1, mut t2) = (None, None, None, None);
    if let Some(signs) = &req.signs {
        if let Ok((a, b)) = irrepresentable(&g, s, signs) {
            t1s = Some(a);
            t2s = Some(b);
        }
    }
    if let (Some(pen), Some(bo)) = (&req.penalty, &req.beta_o) {
        if let Ok((a, b)) = generalized_theta(&g, pen, s, bo) {
            t1 = Some(a);
            t2 = Some(b);
        }
    }
    let q0 = req.q_list.first().copied().unwrap_or(2.0);
    let cif_lower_bound = cif_sparse_eigen_bound(&kappa, p, q0, req.xi, s.len());
    Ok(RegularityReport {
        n: design.n(),
        p,
        xi: req.xi,
        support: s.clone(),
        kappa,
        re1,
        re2,
        cif,
        rif,
        theta1_star: t1s,
        theta2_star: t2s,
        theta1: t1,
        theta2: t2,
        cif_lower_bound,
        heuristic,
    })
}

/// The factor comparison chain for one (ξ, S), plus the κ±-based CIF bound for q ∈ {1, 2}.
pub fn factor_inequalities(gram: &Mat, xi: f64, s: &SupportSet, opts: &ConeOptions) -> Result<Vec<FactorInequality>> {
    let p = gram.nrows();
    if s.is_empty() {
        return Err(Error::InvalidParameter("support must be nonempty".into()));
    }
    let tol = |v: f64| 1e-8 + 1e-8 * v.abs();
    let (re1, re2) = cone::re_factors(gram, xi, s, opts)?;
    let cif1 = cone::cif(gram, 1.0, xi, s, opts)?;
    let cif2 = cone::cif(gram, 2.0, xi, s, opts)?;
    let (r1, r2) = (re1.value, re2.value);
    let mut out = Vec::new();
    let mut push = |name: &str, lhs: f64, rhs: f64| {
        out.push(FactorInequality { name: name.into(), lhs, rhs, holds: lhs >= rhs - tol(rhs) });
    };
    push("re1 >= re2", r1, r2);
    push("cif1 >= re1^2/(1+xi)^2", cif1.value, r1 * r1 / ((1.0 + xi) * (1.0 + xi)));
    push("cif2 >= re1*re2/(1+xi)", cif2.value, r1 * r2 / (1.0 + xi));
    push("re1*re2/(1+xi) >= re2^2/(1+xi)", r1 * r2 / (1.0 + xi), r2 * r2 / (1.0 + xi));
    let table = sparse_eigen_table(gram, p, &EigenOptions::default())?;
    for (q, c) in [(1.0, &cif1), (2.0, &cif2)] {
        if let Some(lb) = cif_sparse_eigen_bound(&table, p, q, xi, s.len()) {
            push(if q == 1.0 { "cif1 >= sparse-eigen bound" } else { "cif2 >= sparse-eigen bound" }, c.value, lb);
        }
    }
    Ok(out)
}

/// Random permutation helper used by samplers.
pub(crate) fn random_signs<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gram2(r: f64) -> Mat {
        Mat::from_row_slice(2, 2, &[1.0, r, r, 1.0])
    }

    #[test]
    fn normalization_examples() {
        let d = DesignMatrix::from_rows(4, 2, &[1.0, 3.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let nd = d.normalize_columns().unwrap();
        assert_eq!(nd.x().column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0, 1.0]);
        assert!((nd.x()[(0, 1)] - 2.0).abs() < 1e-15);
        assert!((nd.scales()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(nd.is_normalized());
        let z = DesignMatrix::from_rows(2, 2, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(z.normalize_columns(), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn support_set_rules() {
        assert!(SupportSet::new(vec![1, 1], 3).is_err());
        assert!(SupportSet::new(vec![3], 3).is_err());
        let s = SupportSet::new(vec![2, 0], 4).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.complement(4).indices(), &[1, 3]);
        assert_eq!(SupportSet::from_beta(&[0.0, 1e-9, -2.0], 1e-8).indices(), &[2]);
        let t = SupportSet::new(vec![2, 3], 4).unwrap();
        assert_eq!(s.union(&t).indices(), &[0, 2, 3]);
        assert_eq!(s.minus_count(&t), 1);
    }

    #[test]
    fn sparse_eigen_examples() {
        let id = Mat::identity(5, 5);
        for m in 1..=5 {
            let e = sparse_eigenvalues(&id, m, &EigenOptions::default()).unwrap();
            assert_eq!((e.kappa_minus, e.kappa_plus), (1.0, 1.0));
        }
        let e = sparse_eigenvalues(&gram2(0.3), 2, &EigenOptions::default()).unwrap();
        assert!((e.kappa_minus - 0.7).abs() < 1e-12 && (e.kappa_plus - 1.3).abs() < 1e-12);
        assert!(sparse_eigenvalues(&id, 6, &EigenOptions::default()).is_err());
    }

    #[test]
    fn heuristic_mode_is_flagged_and_inside_exact_range() {
        let mut g = Mat::identity(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    g[(i, j)] = 0.1 * ((i * 3 + j * 5) % 7) as f64 / 7.0;
                    g[(j, i)] = g[(i, j)];
                }
            }
        }
        let exact = sparse_eigenvalues(&g, 3, &EigenOptions::default()).unwrap();
        let heur = sparse_eigenvalues(&g, 3, &EigenOptions { cap: 1, seed: 3, restarts: 20 }).unwrap();
        assert!(!heur.exact);
        assert!(heur.kappa_minus >= exact.kappa_minus - 1e-12);
        assert!(heur.kappa_plus <= exact.kappa_plus + 1e-12);
    }

    #[test]
    fn irrepresentable_examples() {
        let r = 0.4;
        let s = SupportSet::new(vec![0, 1], 2).unwrap();
        let (t1, t2) = irrepresentable(&gram2(r), &s, &[1.0, 1.0]).unwrap();
        assert!((t1 - 1.0 / (1.0 + r)).abs() < 1e-12);
        assert_eq!(t2, 0.0);
        let (t1n, _) = irrepresentable(&gram2(r), &s, &[-1.0, -1.0]).unwrap();
        assert!((t1n - t1).abs() < 1e-15);
        let id = Mat::identity(4, 4);
        let s1 = SupportSet::new(vec![1, 2], 4).unwrap();
        assert_eq!(irrepresentable(&id, &s1, &[1.0, -1.0]).unwrap(), (1.0, 0.0));
        assert!(irrepresentable(&gram2(1.0), &s, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn generalized_theta_reduces_to_irrepresentable_for_l1() {
        let g = Mat::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0]);
        let s = SupportSet::new(vec![0, 1], 3).unwrap();
        let pen = Penalty::l1(0.5).unwrap();
        let bo = [2.0, -3.0];
        let (a, b) = irrepresentable(&g, &s, &[1.0, -1.0]).unwrap();
        let (t1, t2) = generalized_theta(&g, &pen, &s, &bo).unwrap();
        assert!((t1 - a).abs() < 1e-10 && (t2 - b).abs() < 1e-10, "{t1} {a} {t2} {b}");
    }

    #[test]
    fn generalized_theta_vanishes_for_mcp_beyond_gamma_lambda() {
        let g = Mat::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0]);
        let s = SupportSet::new(vec![0, 2], 3).unwrap();
        let pen = Penalty::mcp(0.5, 3.0).unwrap();
        assert_eq!(generalized_theta(&g, &pen, &s, &[2.0, -1.6]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn generalized_theta_matches_box_grid_for_capped_l1() {
        let g = Mat::from_row_slice(3, 3, &[1.0, 0.35, 0.1, 0.35, 1.0, -0.25, 0.1, -0.25, 1.0]);
        let s = SupportSet::new(vec![0, 1], 3).unwrap();
        let pen = Penalty::capped_l1(1.0, 4.0).unwrap();
        let bo = [1.93, -2.6];
        let (t1, t2) = generalized_theta(&g, &pen, &s, &bo).unwrap();
        // dense grid over the box, including its corners
        let m = linalg::principal(&g, s.indices());
        let inv = m.clone().cholesky().unwrap().inverse();
        let w2 = linalg::block(&g, &[2], s.indices()) * &inv;
        let grid_sup = |w: &Mat, r: f64| {
            let steps = 400;
            let mut best = 0.0f64;
            for i in 0..=steps {
                for j in 0..=steps {
                    let v0 = -r + 2.0 * r * i as f64 / steps as f64;
                    let v1 = -r + 2.0 * r * j as f64 / steps as f64;
                    for (s0, s1) in [(true, true), (false, false), (true, false), (false, true)] {
                        let side = |t: f64, right: bool| {
                            pen.rho_dot(t, if right { crate::DerivSide::Right } else { crate::DerivSide::Left }).unwrap()
                        };
                        let d = Vector::from_vec(vec![side(bo[0] + v0, s0), side(bo[1] + v1, s1)]);
                        best = best.max((w * d).amax());
                    }
                }
            }
            best
        };
        let ls = pen.threshold_level();
        assert!(grid_sup(&inv, t1 * ls) <= t1 * ls + 1e-9);
        let below = (t1 - 1e-3).max(0.0);
        assert!(t1 == 0.0 || grid_sup(&inv, below * ls) > below * ls);
        assert!((grid_sup(&w2, t1 * ls) / ls - t2).abs() < 1e-9);
        assert!(t1 > 0.0);
    }

    #[test]
    fn sparse_eigen_cif_bound_example() {
        let id = Mat::identity(22, 22);
        let table = sparse_eigen_table(&id, 22, &EigenOptions { cap: 10, seed: 1, restarts: 4 }).unwrap();
        let k = 2;
        let lb = cif_sparse_eigen_bound(&table, 22, 2.0, 2.0, k).unwrap();
        // ℓ = 2k is admissible here: 5ℓ = 20 = p − k
        let l2k = (1.0 - 1.0 / 2f64.sqrt()) / 4.5f64.sqrt();
        assert!(lb >= l2k - 1e-12);
        assert!(cif_sparse_eigen_bound(&table, 5, 2.0, 2.0, 2).is_none());
        assert!(cif_sparse_eigen_bound(&table, 22, 3.0, 2.0, 2).is_none());
    }
}

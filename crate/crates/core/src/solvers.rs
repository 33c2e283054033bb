//! Estimators for the penalized least-squares objective
//! L(b) = ‖y − Xb‖²/(2n) + Σ_j ρ(b_j; λ) and the excess/gap functionals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;

use crate::design::{DesignMatrix, SupportSet, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::linalg::{self, Combinations, Mat, Vector};
use crate::penalty::{DerivSide, Family, Penalty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverKind {
    LassoCd,
    Multistage,
    LocalDescent,
    GlobalEnumerate,
    OracleLse,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::LassoCd => "lasso_cd",
            SolverKind::Multistage => "multistage",
            SolverKind::LocalDescent => "local_descent",
            SolverKind::GlobalEnumerate => "global_enumerate",
            SolverKind::OracleLse => "oracle_lse",
        }
    }

    pub fn parse(s: &str) -> Result<SolverKind> {
        [
            SolverKind::LassoCd,
            SolverKind::Multistage,
            SolverKind::LocalDescent,
            SolverKind::GlobalEnumerate,
            SolverKind::OracleLse,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown solver '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Solution {
    pub beta: Vec<f64>,
    pub support: SupportSet,
    pub objective: f64,
    pub solver: SolverKind,
    /// most-favorable stationarity residual ‖X⊤(Xβ−y)/n + ρ̇(β)‖²; `None` where ρ̇(0) is unbounded
    pub local_excess: Option<f64>,
    pub iterations: usize,
    /// global optimality is proven (ℓ0 enumeration only)
    pub certified: bool,
    /// the iteration stopped on its stationarity test rather than a budget
    pub stationary: bool,
    /// objective per stage (multistage) or per iteration when requested
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverOptions {
    pub max_iter: usize,
    /// stopping rule on the largest coordinate change
    pub tol: f64,
    /// support threshold, relative to max(1, ‖β‖∞)
    pub zero_tol: f64,
    pub seed: u64,
    pub backtrack: f64,
    /// `None` uses 1/λ_max(X⊤X/n)
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub record_trace: bool,
    pub cap: u128,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 100_000,
            tol: 1e-10,
            zero_tol: 1e-8,
            seed: 0,
            backtrack: 0.5,
            initial_step: None,
            min_step: 1e-14,
            record_trace: false,
            cap: ENUMERATION_CAP,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        for (name, v) in [("tol", self.tol), ("zero_tol", self.zero_tol), ("min_step", self.min_step)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtrack factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

fn check_y(design: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != design.n() {
        return Err(Error::Dimension(format!("y has length {}, expected {}", y.len(), design.n())));
    }
    Ok(())
}

fn check_beta(design: &DesignMatrix, b: &[f64]) -> Result<()> {
    if b.len() != design.p() {
        return Err(Error::Dimension(format!("beta has length {}, expected {}", b.len(), design.p())));
    }
    Ok(())
}

/// ‖y − Xb‖²/(2n).
pub fn loss(design: &DesignMatrix, y: &[f64], b: &[f64]) -> f64 {
    let r = Vector::from_column_slice(y) - design.apply(b);
    r.norm_squared() / (2.0 * design.n() as f64)
}

/// L(b) = ‖y − Xb‖²/(2n) + Σ ρ(b_j; λ).
pub fn objective(design: &DesignMatrix, y: &[f64], pen: &Penalty, b: &[f64]) -> f64 {
    loss(design, y, b) + pen.total(b)
}

/// X⊤(Xb − y)/n.
pub fn gradient(design: &DesignMatrix, y: &[f64], b: &[f64]) -> Vector {
    let r = design.apply(b) - Vector::from_column_slice(y);
    design.correlate(&r)
}

/// ν = ‖X⊤(Xβ−y)/n + ρ̇(β)‖² with each ρ̇_j picked from its derivative interval
/// to make that coordinate smallest.
pub fn local_excess(design: &DesignMatrix, y: &[f64], pen: &Penalty, beta: &[f64]) -> Result<f64> {
    check_y(design, y)?;
    check_beta(design, beta)?;
    let g = gradient(design, y, beta);
    let mut sum = 0.0;
    for (j, &b) in beta.iter().enumerate() {
        let d = pen.rho_dot(b, DerivSide::Favorable { residual: g[j] })?;
        let r = g[j] + d;
        sum += r * r;
    }
    Ok(sum)
}

/// L(β) − L(reference).
pub fn global_gap(design: &DesignMatrix, y: &[f64], pen: &Penalty, beta: &[f64], reference: &[f64]) -> f64 {
    objective(design, y, pen, beta) - objective(design, y, pen, reference)
}

fn support_of(beta: &[f64], zero_tol: f64) -> SupportSet {
    let scale = linalg::norm_inf(beta).max(1.0);
    SupportSet::from_beta(beta, zero_tol * scale)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    design: &DesignMatrix,
    y: &[f64],
    pen: &Penalty,
    beta: Vec<f64>,
    solver: SolverKind,
    iterations: usize,
    certified: bool,
    stationary: bool,
    trace: Vec<f64>,
    opts: &SolverOptions,
) -> Solution {
    Solution {
        support: support_of(&beta, opts.zero_tol),
        objective: objective(design, y, pen, &beta),
        local_excess: local_excess(design, y, pen, &beta).ok(),
        beta,
        solver,
        iterations,
        certified,
        stationary,
        trace,
    }
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on ½b⊤Gb − c⊤b + Σ w_j|b_j|; an infinite weight
/// pins the coordinate at zero. Returns (b, sweeps, converged).
fn weighted_cd(g: &Mat, c: &Vector, w: &[f64], start: &[f64], opts: &SolverOptions) -> (Vec<f64>, usize, bool) {
    let p = c.len();
    let mut b = start.to_vec();
    let mut gb = g * Vector::from_column_slice(&b);
    for sweep in 1..=opts.max_iter {
        let mut delta = 0.0f64;
        for j in 0..p {
            let d = g[(j, j)];
            let nb = if w[j].is_infinite() || d <= 0.0 {
                0.0
            } else {
                soft(d * b[j] + c[j] - gb[j], w[j]) / d
            };
            let change = nb - b[j];
            if change != 0.0 {
                for i in 0..p {
                    gb[i] += change * g[(i, j)];
                }
                b[j] = nb;
                delta = delta.max(change.abs());
            }
        }
        if delta <= opts.tol {
            return (b, sweep, true);
        }
    }
    (b, opts.max_iter, false)
}

fn gram_and_corr(design: &DesignMatrix, y: &[f64]) -> (Mat, Vector) {
    (design.gram(), design.correlate(&Vector::from_column_slice(y)))
}

/// Lasso by cyclic coordinate descent with exact soft-threshold updates.
pub fn lasso_cd(design: &DesignMatrix, y: &[f64], lambda: f64, opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    check_y(design, y)?;
    if !design.is_normalized() {
        return Err(Error::Precondition("lasso_cd needs columns normalized to √n".into()));
    }
    let pen = Penalty::l1(lambda)?;
    let (g, c) = gram_and_corr(design, y);
    let p = design.p();
    let (b, it, ok) = weighted_cd(&g, &c, &vec![lambda; p], &vec![0.0; p], opts);
    Ok(finish(design, y, &pen, b, SolverKind::LassoCd, it, false, ok, Vec::new(), opts))
}

/// Number of stages used when the caller does not fix it: ⌈log₂(1 + ‖β̂⁽¹⁾‖₀)⌉ + 2.
pub fn default_stages(first_stage_support: usize) -> usize {
    let v = (1 + first_stage_support) as f64;
    v.log2().ceil() as usize + 2
}

/// Multi-stage convex relaxation: stage ℓ solves a weighted ℓ1 problem with
/// weights ρ̇(|β̂⁽ℓ⁻¹⁾_j|), starting from β̂⁽⁰⁾ = 0.
///
/// Families with unbounded ρ̇(0+) are refused unless `fallback` is set; then the
/// first stage is the Lasso at λ and zero coordinates stay at zero afterwards.
pub fn multistage(
    design: &DesignMatrix,
    y: &[f64],
    pen: &Penalty,
    stages: Option<usize>,
    fallback: bool,
    opts: &SolverOptions,
) -> Result<Solution> {
    opts.validate()?;
    check_y(design, y)?;
    if !design.is_normalized() {
        return Err(Error::Precondition("multistage needs columns normalized to √n".into()));
    }
    let d0 = match pen.rho_dot_zero() {
        Ok(v) => Some(v),
        Err(e) if !fallback => return Err(e),
        Err(_) => None,
    };
    if stages == Some(0) {
        return Err(Error::InvalidParameter("stages must be at least 1".into()));
    }
    let (g, c) = gram_and_corr(design, y);
    let p = design.p();
    let mut b = vec![0.0; p];
    let mut trace = Vec::new();
    let mut total = 0;
    let mut ok = true;
    let mut planned = stages.unwrap_or(usize::MAX);
    let mut stage = 0;
    while stage < planned {
        let w: Vec<f64> = b
            .iter()
            .map(|&bj| match (bj == 0.0, d0) {
                (true, Some(v)) => v,
                (true, None) if stage == 0 => pen.lambda(),
                (true, None) => f64::INFINITY,
                (false, _) => pen.rho_dot(bj.abs(), DerivSide::Right).unwrap_or(f64::INFINITY),
            })
            .collect();
        let (nb, it, conv) = weighted_cd(&g, &c, &w, &b, opts);
        b = nb;
        total += it;
        ok &= conv;
        trace.push(objective(design, y, pen, &b));
        if stage == 0 && stages.is_none() {
            planned = default_stages(support_of(&b, opts.zero_tol).len());
        }
        stage += 1;
    }
    Ok(finish(design, y, pen, b, SolverKind::Multistage, total, false, ok, trace, opts))
}

// Proximal gradient on ½b⊤Gb − c⊤b + Σρ(b) with monotone backtracking.
struct Descent {
    beta: Vec<f64>,
    iterations: usize,
    stationary: bool,
    trace: Vec<f64>,
}

fn smooth_part(g: &Mat, c: &Vector, b: &[f64]) -> f64 {
    let v = Vector::from_column_slice(b);
    0.5 * (g * &v).dot(&v) - c.dot(&v)
}

fn descend(g: &Mat, c: &Vector, pen: &Penalty, init: &[f64], step0: f64, opts: &SolverOptions) -> Descent {
    let p = c.len();
    let f = |b: &[f64]| smooth_part(g, c, b) + pen.total(b);
    let mut b = init.to_vec();
    let mut fb = f(&b);
    let mut s = step0;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(fb);
    }
    let mut cand = vec![0.0; p];
    for it in 1..=opts.max_iter {
        let grad = g * Vector::from_column_slice(&b) - c;
        loop {
            for j in 0..p {
                cand[j] = pen.scaled_prox(b[j] - s * grad[j], s);
            }
            let change = cand.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let fc = f(&cand);
            if change <= opts.tol {
                if fc <= fb {
                    b.copy_from_slice(&cand);
                    fb = fc;
                    if opts.record_trace {
                        trace.push(fb);
                    }
                }
                return Descent { beta: b, iterations: it, stationary: true, trace };
            }
            if fc <= fb {
                b.copy_from_slice(&cand);
                fb = fc;
                if opts.record_trace {
                    trace.push(fb);
                }
                break;
            }
            s *= opts.backtrack;
            if s < opts.min_step {
                return Descent { beta: b, iterations: it, stationary: false, trace };
            }
        }
    }
    Descent { beta: b, iterations: opts.max_iter, stationary: false, trace }
}

fn default_step(g: &Mat, opts: &SolverOptions) -> f64 {
    opts.initial_step.unwrap_or_else(|| {
        let l = linalg::power_iteration(g, 50);
        // power iteration underestimates; a small margin keeps 1/L a majorizing step
        if l > 0.0 { 1.0 / (1.01 * l) } else { 1.0 }
    })
}

/// Monotone proximal-gradient descent from `init`; the objective never increases.
pub fn local_descent(design: &DesignMatrix, y: &[f64], pen: &Penalty, init: &[f64], opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    check_y(design, y)?;
    check_beta(design, init)?;
    let (g, c) = gram_and_corr(design, y);
    let d = descend(&g, &c, pen, init, default_step(&g, opts), opts);
    Ok(finish(design, y, pen, d.beta, SolverKind::LocalDescent, d.iterations, false, d.stationary, d.trace, opts))
}

/// β̂ᵒ: least squares on S, zero elsewhere.
pub fn oracle_coefficients(design: &DesignMatrix, y: &[f64], s: &SupportSet) -> Result<Vec<f64>> {
    check_y(design, y)?;
    let p = design.p();
    let mut b = vec![0.0; p];
    if s.is_empty() {
        return Ok(b);
    }
    let (g, c) = gram_and_corr(design, y);
    let rhs = Vector::from_iterator(s.len(), s.indices().iter().map(|&j| c[j]));
    let sol = linalg::solve_spd(&linalg::principal(&g, s.indices()), &rhs)
        .ok_or_else(|| Error::Rank("X_S is not of full column rank".into()))?;
    for (i, &j) in s.indices().iter().enumerate() {
        b[j] = sol[i];
    }
    Ok(b)
}

/// The oracle LSE as a solution of the penalized problem (objective under `pen`).
pub fn oracle_lse(design: &DesignMatrix, y: &[f64], s: &SupportSet, pen: &Penalty, opts: &SolverOptions) -> Result<Solution> {
    let b = oracle_coefficients(design, y, s)?;
    Ok(finish(design, y, pen, b, SolverKind::OracleLse, 0, false, true, Vec::new(), opts))
}

/// Global minimizer by enumerating supports of size ≤ `max_support`.
///
/// ℓ0 is exact (least squares per support) and certified. Other families solve
/// each restricted problem by descent from the restricted LSE, restricted
/// Lasso and zero, then polish the winner on all coordinates; not certified.
pub fn global_enumerate(
    design: &DesignMatrix,
    y: &[f64],
    pen: &Penalty,
    max_support: Option<usize>,
    opts: &SolverOptions,
) -> Result<Solution> {
    opts.validate()?;
    check_y(design, y)?;
    let p = design.p();
    let m = max_support.unwrap_or(p).min(p);
    let required = linalg::subsets_up_to(p, m);
    if required > opts.cap {
        return Err(Error::CapExceeded { required, cap: opts.cap });
    }
    let (g, c) = gram_and_corr(design, y);
    let yy = Vector::from_column_slice(y).norm_squared() / (2.0 * design.n() as f64);
    let l0 = pen.family() == Family::L0;
    let mut best = vec![0.0; p];
    let mut best_f = yy;
    let mut evaluated = 0usize;
    let restricted_opts = SolverOptions { record_trace: false, ..*opts };
    for k in 1..=m {
        for a in Combinations::new(p, k) {
            evaluated += 1;
            let ga = linalg::principal(&g, &a);
            let ca = Vector::from_iterator(k, a.iter().map(|&j| c[j]));
            let lse = linalg::solve_spd(&ga, &ca);
            let mut candidates: Vec<Vec<f64>> = Vec::new();
            if l0 {
                match lse {
                    Some(v) => candidates.push(v.iter().copied().collect()),
                    None => continue,
                }
            } else {
                let step = default_step(&ga, opts);
                let mut starts: Vec<Vec<f64>> = Vec::new();
                if let Some(v) = &lse {
                    starts.push(v.iter().copied().collect());
                }
                let (las, _, _) = weighted_cd(&ga, &ca, &vec![pen.lambda(); k], &vec![0.0; k], &restricted_opts);
                starts.push(las);
                starts.push(vec![0.0; k]);
                for st in starts {
                    candidates.push(descend(&ga, &ca, pen, &st, step, &restricted_opts).beta);
                }
            }
            for cand in candidates {
                let fa = yy + smooth_part(&ga, &ca, &cand) + pen.total(&cand);
                if fa < best_f {
                    best_f = fa;
                    best.iter_mut().for_each(|v| *v = 0.0);
                    for (i, &j) in a.iter().enumerate() {
                        best[j] = cand[i];
                    }
                }
            }
        }
    }
    let mut stationary = true;
    if !l0 {
        let d = descend(&g, &c, pen, &best, default_step(&g, opts), &restricted_opts);
        if smooth_part(&g, &c, &d.beta) + pen.total(&d.beta) <= smooth_part(&g, &c, &best) + pen.total(&best) {
            best = d.beta;
        }
        stationary = d.stationary;
    }
    Ok(finish(design, y, pen, best, SolverKind::GlobalEnumerate, evaluated, l0, stationary, Vec::new(), opts))
}

//! Scalar penalty families ρ(t; λ) and the scalar quantities built on them.

use alloc::format;
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    L0,
    L1,
    CappedL1,
    Mcp,
    Scad,
    Bridge,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::L0,
        Family::L1,
        Family::CappedL1,
        Family::Mcp,
        Family::Scad,
        Family::Bridge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::L0 => "l0",
            Family::L1 => "l1",
            Family::CappedL1 => "capped_l1",
            Family::Mcp => "mcp",
            Family::Scad => "scad",
            Family::Bridge => "bridge",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "l0" => Family::L0,
            "l1" | "lasso" => Family::L1,
            "capped_l1" | "capped-l1" | "cappedl1" | "capped" => Family::CappedL1,
            "mcp" => Family::Mcp,
            "scad" => Family::Scad,
            "bridge" => Family::Bridge,
            _ => return Err(Error::InvalidParameter(format!("unknown penalty family `{s}`"))),
        })
    }
}

impl core::fmt::Display for Family {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which one-sided derivative to return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivSide {
    Left,
    Right,
    /// Any value in the derivative interval, picked to minimize `|residual + d|`.
    Favorable { residual: f64 },
}

/// A penalty ρ(t; λ) from one of the supported families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    family: Family,
    lambda: f64,
    gamma: f64,
    alpha: f64,
    lambda_star: f64,
}

/// Config-file form of a penalty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PenaltyConfig {
    pub family: Family,
    pub lambda: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub gamma: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub alpha: Option<f64>,
}

impl TryFrom<&PenaltyConfig> for Penalty {
    type Error = Error;
    fn try_from(c: &PenaltyConfig) -> Result<Penalty> {
        Penalty::new(c.family, c.lambda, c.gamma, c.alpha)
    }
}

impl From<&Penalty> for PenaltyConfig {
    fn from(p: &Penalty) -> PenaltyConfig {
        PenaltyConfig {
            family: p.family,
            lambda: p.lambda,
            gamma: p.gamma(),
            alpha: p.alpha(),
        }
    }
}

// Quadratic piece of ρ on [lo, hi]: ρ(t) = c0 + c1 t − c2 t²/2.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Piece {
    fn new(lo: f64, hi: f64, c0: f64, c1: f64, c2: f64) -> Piece {
        Piece { lo, hi, c0, c1, c2 }
    }
    fn eval(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t - 0.5 * self.c2 * t * t
    }
}

fn bad(msg: alloc::string::String) -> Error {
    Error::InvalidParameter(msg)
}

impl Penalty {
    pub fn new(family: Family, lambda: f64, gamma: Option<f64>, alpha: Option<f64>) -> Result<Penalty> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(bad(format!("lambda must be positive and finite, got {lambda}")));
        }
        let need_gamma = |min: f64| -> Result<f64> {
            let g = gamma.ok_or_else(|| bad(format!("{family} needs gamma")))?;
            if !(g.is_finite() && g >= min) {
                return Err(bad(format!("{family} needs gamma >= {min}, got {g}")));
            }
            Ok(g)
        };
        let (gamma, alpha) = match family {
            Family::L0 | Family::L1 => (f64::NAN, f64::NAN),
            Family::CappedL1 | Family::Mcp => (need_gamma(1.0)?, f64::NAN),
            Family::Scad => (need_gamma(2.0)?, f64::NAN),
            Family::Bridge => {
                let a = alpha.ok_or_else(|| bad("bridge needs alpha".into()))?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(bad(format!("bridge needs alpha in (0,1), got {a}")));
                }
                (f64::NAN, a)
            }
        };
        let mut p = Penalty { family, lambda, gamma, alpha, lambda_star: lambda };
        if family == Family::Bridge {
            p.lambda_star = p.threshold_level_numeric();
        }
        Ok(p)
    }

    pub fn l0(lambda: f64) -> Result<Penalty> {
        Penalty::new(Family::L0, lambda, None, None)
    }
    pub fn l1(lambda: f64) -> Result<Penalty> {
        Penalty::new(Family::L1, lambda, None, None)
    }
    pub fn capped_l1(lambda: f64, gamma: f64) -> Result<Penalty> {
        Penalty::new(Family::CappedL1, lambda, Some(gamma), None)
    }
    pub fn mcp(lambda: f64, gamma: f64) -> Result<Penalty> {
        Penalty::new(Family::Mcp, lambda, Some(gamma), None)
    }
    pub fn scad(lambda: f64, gamma: f64) -> Result<Penalty> {
        Penalty::new(Family::Scad, lambda, Some(gamma), None)
    }
    pub fn bridge(lambda: f64, alpha: f64) -> Result<Penalty> {
        Penalty::new(Family::Bridge, lambda, None, Some(alpha))
    }

    /// Same family and shape at a different level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Penalty> {
        Penalty::new(self.family, lambda, self.gamma(), self.alpha())
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma(&self) -> Option<f64> {
        if self.gamma.is_nan() { None } else { Some(self.gamma) }
    }
    pub fn alpha(&self) -> Option<f64> {
        if self.alpha.is_nan() { None } else { Some(self.alpha) }
    }

    fn bridge_const(&self) -> f64 {
        let a = self.alpha;
        self.lambda.powf(2.0 - a) * (2.0 * (1.0 - a)).powf(1.0 - a) / (2.0 - a).powf(2.0 - a)
    }

    /// ρ(t; λ).
    pub fn rho(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        let (l, g) = (self.lambda, self.gamma);
        match self.family {
            Family::L0 => l * l / 2.0,
            Family::L1 => l * t,
            Family::CappedL1 => (l * t).min(g * l * l / 2.0),
            Family::Mcp => {
                if t <= g * l {
                    l * t - t * t / (2.0 * g)
                } else {
                    g * l * l / 2.0
                }
            }
            Family::Scad => {
                if t <= l {
                    l * t
                } else if t <= g * l {
                    (2.0 * g * l * t - t * t - l * l) / (2.0 * (g - 1.0))
                } else {
                    (g + 1.0) * l * l / 2.0
                }
            }
            Family::Bridge => self.bridge_const() * t.powf(self.alpha),
        }
    }

    /// ρ(t)/t for t ≠ 0, evaluated without cancellation.
    pub fn rho_over_t(&self, t: f64) -> f64 {
        let t = t.abs();
        let (l, g) = (self.lambda, self.gamma);
        match self.family {
            Family::L0 => l * l / (2.0 * t),
            Family::L1 => l,
            Family::CappedL1 => l.min(g * l * l / (2.0 * t)),
            Family::Mcp => {
                if t <= g * l {
                    l - t / (2.0 * g)
                } else {
                    g * l * l / (2.0 * t)
                }
            }
            Family::Scad => {
                if t <= l {
                    l
                } else if t <= g * l {
                    (2.0 * g * l - t - l * l / t) / (2.0 * (g - 1.0))
                } else {
                    (g + 1.0) * l * l / (2.0 * t)
                }
            }
            Family::Bridge => self.bridge_const() * t.powf(self.alpha - 1.0),
        }
    }

    /// Sum of ρ over the entries of `b`.
    pub fn total(&self, b: &[f64]) -> f64 {
        b.iter().map(|&t| self.rho(t)).sum()
    }

    // One-sided derivative at t > 0.
    fn dpos(&self, t: f64, right: bool) -> f64 {
        let (l, g) = (self.lambda, self.gamma);
        match self.family {
            Family::L0 => 0.0,
            Family::L1 => l,
            Family::CappedL1 => {
                let k = g * l / 2.0;
                if t < k || (t == k && !right) { l } else { 0.0 }
            }
            Family::Mcp => (l - t / g).max(0.0),
            Family::Scad => {
                if t <= l {
                    l
                } else if t <= g * l {
                    (g * l - t) / (g - 1.0)
                } else {
                    0.0
                }
            }
            Family::Bridge => self.bridge_const() * self.alpha * t.powf(self.alpha - 1.0),
        }
    }

    /// ρ̇(0+; λ); an error when the derivative is unbounded at zero.
    pub fn rho_dot_zero(&self) -> Result<f64> {
        match self.family {
            Family::L0 | Family::Bridge => Err(Error::UnboundedDerivative { family: self.family.name(), at: 0.0 }),
            _ => Ok(self.lambda),
        }
    }

    /// The derivative interval `(lo, hi)` at t, sorted.
    pub fn rho_dot_interval(&self, t: f64) -> Result<(f64, f64)> {
        let l = self.rho_dot(t, DerivSide::Left)?;
        let r = self.rho_dot(t, DerivSide::Right)?;
        Ok((l.min(r), l.max(r)))
    }

    pub fn rho_dot(&self, t: f64, side: DerivSide) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite argument {t}")));
        }
        match side {
            DerivSide::Right => Ok(if t > 0.0 {
                self.dpos(t, true)
            } else if t < 0.0 {
                -self.dpos(-t, false)
            } else {
                self.rho_dot_zero()?
            }),
            DerivSide::Left => Ok(if t > 0.0 {
                self.dpos(t, false)
            } else if t < 0.0 {
                -self.dpos(-t, true)
            } else {
                -self.rho_dot_zero()?
            }),
            DerivSide::Favorable { residual } => {
                let (lo, hi) = self.rho_dot_interval(t)?;
                Ok((-residual).clamp(lo, hi))
            }
        }
    }

    /// Threshold level λ* = inf_{t>0} {t/2 + ρ(t)/t}.
    pub fn threshold_level(&self) -> f64 {
        self.lambda_star
    }

    /// Grid-plus-golden-section minimization of t/2 + ρ(t)/t.
    pub fn threshold_level_numeric(&self) -> f64 {
        let h = |t: f64| t / 2.0 + self.rho(t) / t;
        let (lo, hi) = ((1e-8 * self.lambda).ln(), (1e3 * self.lambda).ln());
        const N: usize = 4000;
        let at = |i: usize| (lo + (hi - lo) * i as f64 / N as f64).exp();
        let mut best = (0usize, f64::INFINITY);
        for i in 0..=N {
            let v = h(at(i));
            if v < best.1 {
                best = (i, v);
            }
        }
        let a = at(best.0.saturating_sub(1));
        let b = at((best.0 + 1).min(N));
        let (_, v) = golden_min(h, a, b, 1e-12);
        v.min(best.1)
    }

    /// Proximal map argmin_t {(z−t)²/2 + ρ(t)}, ties toward smaller |t|.
    pub fn scalar_prox(&self, z: f64) -> f64 {
        self.scaled_prox(z, 1.0)
    }

    /// argmin_t {(z−t)²/2 + s·ρ(t)} for a step s > 0, ties toward smaller |t|.
    pub fn scaled_prox(&self, z: f64, s: f64) -> f64 {
        let a = z.abs();
        if a == 0.0 {
            return 0.0;
        }
        // objective minus its value at t = 0, factored to keep the sign exact near λ*
        let gain = |t: f64| if t == 0.0 { 0.0 } else { t * (t / 2.0 - a + s * self.rho_over_t(t)) };
        let mut best_t = 0.0;
        let mut best_v = 0.0;
        let mut consider = |t: f64| {
            let t = t.clamp(0.0, a);
            let v = gain(t);
            if v < best_v || (v == best_v && t < best_t) {
                best_t = t;
                best_v = v;
            }
        };
        match self.family {
            Family::L0 => consider(a),
            Family::Bridge => {
                let c = s * self.bridge_const();
                let al = self.alpha;
                let dh = |t: f64| t - a + c * al * t.powf(al - 1.0);
                let tc = (c * al * (1.0 - al)).powf(1.0 / (2.0 - al));
                if tc < a && dh(tc) < 0.0 {
                    let (mut lo, mut hi) = (tc, a);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if dh(mid) < 0.0 { lo = mid } else { hi = mid }
                        if hi - lo <= 1e-16 * hi {
                            break;
                        }
                    }
                    consider(lo);
                    consider(hi);
                }
            }
            _ => {
                let (pieces, n) = self.pieces();
                for pc in &pieces[..n] {
                    if pc.lo > a {
                        continue;
                    }
                    let hi = pc.hi.min(a);
                    consider(pc.lo);
                    consider(hi);
                    let curv = 1.0 - s * pc.c2;
                    if curv > 0.0 {
                        consider(((a - s * pc.c1) / curv).clamp(pc.lo, hi));
                    }
                }
            }
        }
        if z < 0.0 { -best_t } else { best_t }
    }

    // Quadratic pieces of ρ on [0, ∞) for the piecewise-quadratic families.
    fn pieces(&self) -> ([Piece; 3], usize) {
        let (l, g) = (self.lambda, self.gamma);
        let z = Piece::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let inf = f64::INFINITY;
        match self.family {
            Family::L1 => ([Piece::new(0.0, inf, 0.0, l, 0.0), z, z], 1),
            Family::CappedL1 => (
                [Piece::new(0.0, g * l / 2.0, 0.0, l, 0.0), Piece::new(g * l / 2.0, inf, g * l * l / 2.0, 0.0, 0.0), z],
                2,
            ),
            Family::Mcp => (
                [Piece::new(0.0, g * l, 0.0, l, 1.0 / g), Piece::new(g * l, inf, g * l * l / 2.0, 0.0, 0.0), z],
                2,
            ),
            Family::Scad => (
                [
                    Piece::new(0.0, l, 0.0, l, 0.0),
                    Piece::new(l, g * l, -l * l / (2.0 * (g - 1.0)), g * l / (g - 1.0), 1.0 / (g - 1.0)),
                    Piece::new(g * l, inf, (g + 1.0) * l * l / 2.0, 0.0, 0.0),
                ],
                3,
            ),
            Family::L0 | Family::Bridge => ([z, z, z], 0),
        }
    }

    #[doc(hidden)]
    pub fn piece_value(&self, t: f64) -> Option<f64> {
        let (pieces, n) = self.pieces();
        let t = t.abs();
        pieces[..n].iter().find(|p| t >= p.lo && t <= p.hi).map(|p| p.eval(t))
    }

    /// Proposition-1 sandwich `(lower, upper)` at t.
    pub fn envelope_bounds(&self, t: f64) -> (f64, f64) {
        let ls = self.lambda_star;
        let lower = (ls * t.abs() / 2.0).min(ls * ls / 2.0);
        (lower, rho_star(t, ls))
    }

    /// max_t ρ(t), infinite for unbounded penalties.
    pub fn max_value(&self) -> f64 {
        let (l, g) = (self.lambda, self.gamma);
        match self.family {
            Family::L0 => l * l / 2.0,
            Family::CappedL1 | Family::Mcp => g * l * l / 2.0,
            Family::Scad => (g + 1.0) * l * l / 2.0,
            Family::L1 | Family::Bridge => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.max_value().is_finite()
    }

    /// γ* = max_t ρ(t)/λ².
    pub fn gamma_star(&self) -> f64 {
        self.max_value() / (self.lambda * self.lambda)
    }

    pub fn is_continuous_at_zero(&self) -> bool {
        self.family != Family::L0
    }

    /// Upper bound on Δ(a, k; λ): min(k ρ*(a; λ*), k max ρ).
    pub fn delta_bound(&self, a: f64, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let k = k as f64;
        (k * rho_star(a, self.lambda_star)).min(k * self.max_value())
    }

    /// Maximum concavity κ* = sup −(ρ̇(t) − ρ̇(s))/(t − s); infinite with a jump in ρ̇ or ρ.
    pub fn max_concavity(&self) -> f64 {
        match self.family {
            Family::L1 => 0.0,
            Family::Mcp => 1.0 / self.gamma,
            Family::Scad => 1.0 / (self.gamma - 1.0),
            _ => f64::INFINITY,
        }
    }

    /// sup_t |ρ̇(t)|, that is ρ̇(0+) for the concave families.
    pub fn sup_derivative(&self) -> f64 {
        self.rho_dot_zero().unwrap_or(f64::INFINITY)
    }

    /// inf_{0<s<t0} ρ̇(s); +∞ for t0 = 0.
    pub fn inf_derivative_below(&self, t0: f64) -> f64 {
        if t0 <= 0.0 {
            return f64::INFINITY;
        }
        // every family here has ρ̇ nonincreasing on (0, ∞)
        self.dpos(t0, false)
    }

    // Nonnegative breakpoints of ρ̇.
    pub(crate) fn kinks(&self) -> ([f64; 3], usize) {
        let (l, g) = (self.lambda, self.gamma);
        match self.family {
            Family::L1 => ([0.0, 0.0, 0.0], 1),
            Family::CappedL1 => ([0.0, g * l / 2.0, 0.0], 2),
            Family::Mcp => ([0.0, g * l, 0.0], 2),
            Family::Scad => ([0.0, l, g * l], 3),
            Family::L0 | Family::Bridge => ([0.0; 3], 1),
        }
    }

    /// Nonconvexity measure θ(t, κ); t = 0 means 0+. At kinks of ρ̇ the derivative
    /// value at t is the one in its interval that makes θ smallest.
    pub fn nonconvexity_theta(&self, t: f64, kappa: f64) -> f64 {
        if matches!(self.family, Family::L0 | Family::Bridge) {
            return f64::INFINITY;
        }
        let t = t.abs();
        let (a, b) = self.nonconvexity_theta_parts(t, kappa);
        let (lo, hi) = if t > 0.0 {
            (self.dpos(t, true).min(self.dpos(t, false)), self.dpos(t, true).max(self.dpos(t, false)))
        } else {
            (self.lambda, self.lambda)
        };
        theta_from_bounds(a, b, lo, hi)
    }

    /// θ(t, κ) with the derivative at t pinned to `d` instead of the favorable value.
    pub fn nonconvexity_theta_at(&self, t: f64, d: f64, kappa: f64) -> f64 {
        if matches!(self.family, Family::L0 | Family::Bridge) {
            return f64::INFINITY;
        }
        let (sgn, t) = if t < 0.0 { (-1.0, -t) } else { (1.0, t) };
        let base = self.nonconvexity_theta_parts(t, kappa);
        theta_from_bounds(base.0, base.1, sgn * d, sgn * d)
    }

    fn nonconvexity_theta_parts(&self, t: f64, kappa: f64) -> (f64, f64) {
        let phi = |s: f64, right: bool| {
            let d = if s == 0.0 { self.lambda } else { self.dpos(s, right) };
            d + kappa * s
        };
        let mut sup_left = f64::NEG_INFINITY;
        let mut inf_right = if t > 0.0 { phi(t, true) } else { phi(0.0, true) };
        if t > 0.0 {
            sup_left = phi(0.0, true).max(phi(t, false));
        }
        let (ks, n) = self.kinks();
        for &k in &ks[..n] {
            if k > 0.0 && k < t {
                sup_left = sup_left.max(phi(k, false)).max(phi(k, true));
            }
            if k > t {
                inf_right = inf_right.min(phi(k, false)).min(phi(k, true));
            }
        }
        if kappa == 0.0 {
            inf_right = inf_right.min(phi(ks[n - 1].max(t) + 1.0, true));
        }
        (sup_left - kappa * t, inf_right - kappa * t)
    }

    /// Grid-supremum evaluation of θ(t, κ), independent of the kink table.
    pub fn nonconvexity_theta_grid(&self, t: f64, kappa: f64, points: usize) -> f64 {
        if matches!(self.family, Family::L0 | Family::Bridge) {
            return f64::INFINITY;
        }
        let t = t.abs();
        let g = if self.gamma.is_nan() { 1.0 } else { self.gamma };
        let span = 10.0 * (g * self.lambda).max(self.lambda).max(t);
        let rd = |s: f64| -> f64 {
            if s <= 0.0 {
                self.lambda
            } else {
                self.rho_dot(s, DerivSide::Right).unwrap_or(self.lambda)
            }
        };
        let phi = |s: f64| rd(s) + kappa * s;
        let eps = 1e-12 * t.max(1.0);
        let mut sup_left = f64::NEG_INFINITY;
        let mut inf_right = f64::INFINITY;
        let mut left_best = (f64::NEG_INFINITY, 0usize);
        let mut right_best = (f64::INFINITY, 0usize);
        let step = span / points as f64;
        for i in 0..=points {
            let s = i as f64 * step;
            let v = phi(if i == 0 { eps } else { s });
            if s < t && v > left_best.0 {
                left_best = (v, i);
            }
            if s > t && v < right_best.0 {
                right_best = (v, i);
            }
        }
        if t > 0.0 {
            sup_left = left_best.0.max(phi(eps)).max(phi(t - eps));
            if left_best.0.is_finite() {
                let i = left_best.1;
                let a = (i.saturating_sub(1) as f64 * step).max(eps);
                let b = ((i + 1) as f64 * step).min(t - eps);
                if b > a {
                    let (_, v) = golden_min(|s| -phi(s), a, b, 1e-14);
                    sup_left = sup_left.max(-v);
                }
            }
        }
        inf_right = inf_right.min(right_best.0).min(phi(t + eps));
        if right_best.0.is_finite() {
            let i = right_best.1;
            let a = ((i.saturating_sub(1)) as f64 * step).max(t + eps);
            let b = (i + 1) as f64 * step;
            if b > a {
                let (_, v) = golden_min(phi, a, b, 1e-14);
                inf_right = inf_right.min(v);
            }
        }
        let (lo, hi) = if t > 0.0 { self.rho_dot_interval(t).unwrap_or((0.0, 0.0)) } else { (self.lambda, self.lambda) };
        theta_from_bounds(sup_left - kappa * t, inf_right - kappa * t, lo, hi)
    }

    /// Range `(min, max)` of one-sided derivative values over the closed interval
    /// [lo, hi]; infinite when the interval meets an unbounded derivative.
    pub fn derivative_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        let mut take = |v: f64| {
            mn = mn.min(v);
            mx = mx.max(v);
        };
        if lo == hi {
            match self.rho_dot_interval(lo) {
                Ok((a, b)) => {
                    take(a);
                    take(b);
                }
                Err(_) => return (f64::NEG_INFINITY, f64::INFINITY),
            }
            return (mn, mx);
        }
        if lo <= 0.0 && hi >= 0.0 {
            let d0 = self.sup_derivative();
            if matches!(self.family, Family::L0) {
                return (f64::NEG_INFINITY, f64::INFINITY);
            }
            take(d0);
            take(-d0);
        }
        let side = |t: f64, right: bool| -> f64 {
            if t == 0.0 {
                if right { self.sup_derivative() } else { -self.sup_derivative() }
            } else if right {
                self.rho_dot(t, DerivSide::Right).unwrap_or(f64::NAN)
            } else {
                self.rho_dot(t, DerivSide::Left).unwrap_or(f64::NAN)
            }
        };
        take(side(lo, true));
        take(side(hi, false));
        let (ks, n) = self.kinks();
        for &k in &ks[..n] {
            for c in [k, -k] {
                if c != 0.0 && c > lo && c < hi {
                    take(side(c, true));
                    take(side(c, false));
                }
            }
        }
        (mn, mx)
    }

    /// Smallest κ with θ(t_j, κ) = 0 (up to rounding) for every listed t, zeros meaning 0+.
    pub fn min_vanishing_kappa(&self, ts: &[f64]) -> f64 {
        let tol = 1e-12 * self.lambda;
        let zero_all = |k: f64| ts.iter().all(|&t| self.nonconvexity_theta(t, k) <= tol);
        let mut hi = 1.0;
        while !zero_all(hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        if zero_all(0.0) {
            return 0.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if zero_all(mid) { hi = mid } else { lo = mid }
        }
        hi
    }
}

fn theta_from_bounds(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let d = if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return 0.0;
    } else if a == f64::NEG_INFINITY {
        lo
    } else if b == f64::INFINITY {
        hi
    } else {
        (0.5 * (a + b)).clamp(lo, hi)
    };
    (a - d).max(d - b).max(0.0)
}

/// ρ*(t; ζ) = ζ|t| + (ζ − |t|/2)₊²/2.
pub fn rho_star(t: f64, zeta: f64) -> f64 {
    let t = t.abs();
    let r = (zeta - t / 2.0).max(0.0);
    zeta * t + r * r / 2.0
}

/// Golden-section minimization on [a, b]; returns the best point seen and its value.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
    }
    best
}

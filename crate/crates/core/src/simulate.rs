//! Synthetic instances y = Xβ + ε with Gaussian rows and sub-Gaussian noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // float math without std; shadowed when std is linked
use num_traits::Float;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::design::{DesignMatrix, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Row covariance of the design.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SigmaSpec {
    Identity,
    /// Σ_ij = r^|i−j|
    Toeplitz(f64),
    /// unit diagonal, r elsewhere
    Equicorrelated(f64),
    /// row-major p×p
    Custom(Vec<Vec<f64>>),
}

impl SigmaSpec {
    pub fn matrix(&self, p: usize) -> Result<Mat> {
        let m = match self {
            SigmaSpec::Identity => Mat::identity(p, p),
            SigmaSpec::Toeplitz(r) => {
                if !(r.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!("Toeplitz r = {r} must satisfy |r| < 1")));
                }
                Mat::from_fn(p, p, |i, j| r.powi(i.abs_diff(j) as i32))
            }
            SigmaSpec::Equicorrelated(r) => Mat::from_fn(p, p, |i, j| if i == j { 1.0 } else { *r }),
            SigmaSpec::Custom(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Dimension(format!("custom Σ must be {p}×{p}")));
                }
                Mat::from_fn(p, p, |i, j| rows[i][j])
            }
        };
        for i in 0..p {
            if (m[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter("Σ must have unit diagonal".into()));
            }
            for j in 0..i {
                if !m[(i, j)].is_finite() || (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("Σ must be symmetric and finite".into()));
                }
            }
        }
        Ok(m)
    }

    /// Lower Cholesky factor; parameter error unless Σ is positive definite.
    pub fn cholesky(&self, p: usize) -> Result<Mat> {
        let m = self.matrix(p)?;
        let ch = m.cholesky().ok_or_else(|| Error::InvalidParameter("Σ is not positive definite".into()))?;
        let l = ch.l();
        let min_pivot = (0..p).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
        if p > 0 && min_pivot < 1e-8 {
            return Err(Error::InvalidParameter("Σ is not positive definite".into()));
        }
        Ok(l)
    }
}

/// Coefficient pattern on the support.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BetaSpec {
    /// |β_j| = c·σ√((2/n) ln p) with random signs (σ = 1 when the noise is zero)
    Strong { c: f64 },
    /// top·ratio^i down the support, random signs
    Decaying { top: f64, ratio: f64 },
    /// min(p, 3s) coefficients of size λ_univ·s/m, so Σ min(1, |β_j|/λ_univ) = s
    CappedL1,
    /// full p-vector; `s` is ignored
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// ±σ with equal probability; a robustness option outside the Gaussian model
    Rademacher,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceMeta {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma_spec: SigmaSpec,
    pub beta_spec: BetaSpec,
    pub noise: NoiseKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    pub support: SupportSet,
    pub sigma: f64,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub meta: InstanceMeta,
}

impl Instance {
    /// Assembles an instance from stored parts; y must equal Xβ + ε.
    pub fn from_parts(x: DesignMatrix, beta: Vec<f64>, eps: Vec<f64>, sigma: f64, seed: u64, meta: InstanceMeta) -> Result<Instance> {
        if beta.len() != x.p() || eps.len() != x.n() {
            return Err(Error::Dimension("β or ε has the wrong length".into()));
        }
        let xb = x.apply(&beta);
        let y = xb.iter().zip(&eps).map(|(a, e)| a + e).collect();
        let support = SupportSet::from_beta(&beta, 0.0);
        Ok(Instance { x, y, beta, support, sigma, eps, seed, meta })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn p(&self) -> usize {
        self.x.p()
    }
}

/// λ_univ = σ√((2/n) ln p).
pub fn universal_lambda(n: usize, p: usize, sigma: f64) -> f64 {
    sigma * (2.0 * (p as f64).ln() / n as f64).sqrt()
}

/// Draws X (then normalizes its columns), the support, signs and noise, in
/// that order, from one ChaCha20 stream seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn gen_instance(
    n: usize,
    p: usize,
    s: usize,
    sigma_spec: &SigmaSpec,
    beta_spec: &BetaSpec,
    noise_sigma: f64,
    noise: NoiseKind,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("n and p must be positive".into()));
    }
    if s > p {
        return Err(Error::InvalidParameter(format!("s = {s} exceeds p = {p}")));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter("noise level must be finite and nonnegative".into()));
    }
    let l = sigma_spec.cholesky(p)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let z = Mat::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = DesignMatrix::new(z * l.transpose())?.normalize_columns()?;

    let scale = if noise_sigma > 0.0 { noise_sigma } else { 1.0 };
    let lambda_univ = universal_lambda(n, p, scale);
    let mut beta = vec![0.0; p];
    match beta_spec {
        BetaSpec::Fixed(b) => {
            if b.len() != p || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dimension(format!("fixed β must be a finite {p}-vector")));
            }
            beta.copy_from_slice(b);
        }
        _ => {
            let size = match beta_spec {
                BetaSpec::CappedL1 => (3 * s).min(p),
                _ => s,
            };
            let mut idx = sample(&mut rng, p, size).into_vec();
            idx.sort_unstable();
            let signs: Vec<f64> = (0..size).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            for (i, (&j, sg)) in idx.iter().zip(signs).enumerate() {
                let mag = match beta_spec {
                    BetaSpec::Strong { c } => c * lambda_univ,
                    BetaSpec::Decaying { top, ratio } => top * ratio.powi(i as i32),
                    BetaSpec::CappedL1 => lambda_univ * s as f64 / size as f64,
                    BetaSpec::Fixed(_) => unreachable!(),
                };
                beta[j] = sg * mag;
            }
        }
    }
    let eps: Vec<f64> = (0..n)
        .map(|_| match noise {
            NoiseKind::Gaussian => noise_sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseKind::Rademacher => {
                if rng.random::<bool>() {
                    noise_sigma
                } else {
                    -noise_sigma
                }
            }
        })
        .collect();
    let meta = InstanceMeta { n, p, s, sigma_spec: sigma_spec.clone(), beta_spec: beta_spec.clone(), noise };
    Instance::from_parts(x, beta, eps, noise_sigma, seed, meta)
}

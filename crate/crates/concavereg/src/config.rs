//! JSON experiment configuration. Every field has a default, so `{}` is a
//! valid config: the default verify suite (n = 32, p = 10, 20 replications).

use std::path::{Path, PathBuf};

use concavereg_core::penalty::{Family, Penalty, PenaltyConfig};
use concavereg_core::simulate::{BetaSpec, NoiseKind, SigmaSpec};
use concavereg_core::solvers::{SolverKind, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub sigma: SigmaSpec,
    pub beta: BetaSpec,
    pub noise_sigma: f64,
    pub noise: NoiseKind,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            n: 32,
            p: 10,
            s: 2,
            sigma: SigmaSpec::Toeplitz(0.3),
            beta: BetaSpec::Strong { c: 6.0 },
            noise_sigma: 0.5,
            noise: NoiseKind::Gaussian,
        }
    }
}

/// Files of an ingested data set; `x` and `y` are required, `beta` is needed
/// by the theorem suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub beta: Option<PathBuf>,
    #[serde(default = "one")]
    pub sigma: f64,
}

fn one() -> f64 {
    1.0
}

/// Groups of checks run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremSet {
    /// ℓq, prediction and penalty-free prediction bounds of the global solution
    Estimation,
    /// false-positive counts of the global solution
    Sparsity,
    /// ℓ0 sparsity, prediction and selection bounds
    L0,
    /// distance between two local solutions
    LocalDistance,
    /// oracle LSE as a local solution and its equality with the global one
    Oracle,
    /// Lasso as approximate global solution
    Lasso,
    Lemmas,
    /// penalty grid checks and the RIF–CIF inequality
    Props,
    Factor,
}

impl TheoremSet {
    pub const ALL: [TheoremSet; 9] = [
        TheoremSet::Estimation,
        TheoremSet::Sparsity,
        TheoremSet::L0,
        TheoremSet::LocalDistance,
        TheoremSet::Oracle,
        TheoremSet::Lasso,
        TheoremSet::Lemmas,
        TheoremSet::Props,
        TheoremSet::Factor,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSpec {
    pub m_max: Option<usize>,
    pub xi: f64,
    pub q_list: Vec<f64>,
    /// sample cone factors instead of enumerating; the report is flagged heuristic
    pub heuristic: bool,
    pub support: Option<Vec<usize>>,
}

impl Default for DiagnoseSpec {
    fn default() -> Self {
        DiagnoseSpec { m_max: None, xi: 3.0, q_list: vec![1.0, 2.0], heuristic: false, support: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub data: Option<DataPaths>,
    pub penalties: Vec<PenaltyConfig>,
    /// when set, every penalty's λ is replaced per instance by this multiple of
    /// σ√((2/n) ln p)
    pub lambda_scale: Option<f64>,
    pub solvers: Vec<SolverKind>,
    pub solver_options: SolverOptions,
    /// let multistage run Bridge with the zero-stays-zero convention
    pub bridge_fallback: bool,
    pub eta: f64,
    pub theorems: Vec<TheoremSet>,
    pub replications: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub diagnose: DiagnoseSpec,
}

fn pen(family: Family, gamma: Option<f64>) -> PenaltyConfig {
    PenaltyConfig { family, lambda: 1.0, gamma, alpha: None }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: InstanceSpec::default(),
            data: None,
            penalties: vec![
                pen(Family::L0, None),
                pen(Family::L1, None),
                pen(Family::CappedL1, Some(4.0)),
                pen(Family::Mcp, Some(3.0)),
                pen(Family::Scad, Some(3.7)),
            ],
            lambda_scale: Some(2.5),
            solvers: vec![SolverKind::LassoCd, SolverKind::LocalDescent, SolverKind::GlobalEnumerate],
            solver_options: SolverOptions::default(),
            bridge_fallback: false,
            eta: 0.5,
            theorems: TheoremSet::ALL.to_vec(),
            replications: 20,
            out: PathBuf::from("out"),
            seed: None,
            jobs: 1,
            diagnose: DiagnoseSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> AppResult<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> AppResult<()> {
        if self.penalties.is_empty() {
            return Err(AppError::Config("no penalties given".into()));
        }
        for p in &self.penalties {
            Penalty::try_from(p)?;
        }
        if let Some(s) = self.lambda_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(AppError::Config("lambda_scale must be positive".into()));
            }
        }
        if !(self.eta > 0.0 && self.eta <= concavereg_core::verify::ETA_MAX) {
            return Err(AppError::Config(format!("eta = {} must lie in (0, {}]", self.eta, concavereg_core::verify::ETA_MAX)));
        }
        if self.replications == 0 {
            return Err(AppError::Config("replications must be at least 1".into()));
        }
        let spec = &self.instance;
        if self.data.is_none() && (spec.s > spec.p || spec.n == 0 || spec.p == 0) {
            return Err(AppError::Config(format!("instance needs n >= 1 and s <= p, got n={} p={} s={}", spec.n, spec.p, spec.s)));
        }
        if let Some(d) = &self.data {
            for f in [Some(&d.x), Some(&d.y), d.beta.as_ref()].into_iter().flatten() {
                if !f.exists() {
                    return Err(AppError::ingest(f, "file does not exist"));
                }
            }
        }
        if !self.bridge_fallback
            && self.solvers.contains(&SolverKind::Multistage)
            && self.penalties.iter().any(|p| p.family == Family::Bridge)
        {
            return Err(AppError::Config("multistage with Bridge needs bridge_fallback".into()));
        }
        self.solver_options.validate()?;
        Ok(())
    }

    /// Penalties for an instance with noise level `sigma`.
    pub fn penalties_for(&self, n: usize, p: usize, sigma: f64) -> AppResult<Vec<Penalty>> {
        self.penalties
            .iter()
            .map(|c| {
                let pen = Penalty::try_from(c)?;
                match self.lambda_scale {
                    Some(scale) => {
                        let s = if sigma > 0.0 { sigma } else { 1.0 };
                        let l = scale * concavereg_core::simulate::universal_lambda(n, p.max(2), s);
                        Ok(pen.with_lambda(l)?)
                    }
                    None => Ok(pen),
                }
            })
            .collect()
    }
}

/// Short file-name tag such as `mcp_g3` or `bridge_a0.5`.
pub fn penalty_tag(p: &Penalty) -> String {
    let mut s = p.family().name().to_string();
    if let Some(g) = p.gamma() {
        s.push_str(&format!("_g{g}"));
    }
    if let Some(a) = p.alpha() {
        s.push_str(&format!("_a{a}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default_suite() {
        let c: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        c.validate().unwrap();
        assert_eq!((c.instance.n, c.instance.p, c.replications), (32, 10, 20));
    }

    #[test]
    fn round_trip_and_unknown_fields() {
        let c = ExperimentConfig { seed: Some(7), ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"etaa": 0.5}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"instance": {"sigma": {"toeplitz": 0.5}, "beta": {"strong": {"c": 2}}}, "penalties": [{"family": "mcp", "lambda": 0.3, "gamma": 3}]}"#,
        )
        .unwrap();
        assert_eq!(c.instance.sigma, SigmaSpec::Toeplitz(0.5));
        assert_eq!(c.penalties[0].gamma, Some(3.0));
    }

    #[test]
    fn bridge_multistage_needs_fallback() {
        let mut c = ExperimentConfig {
            penalties: vec![PenaltyConfig { family: Family::Bridge, lambda: 0.3, gamma: None, alpha: Some(0.5) }],
            solvers: vec![SolverKind::Multistage],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.bridge_fallback = true;
        c.validate().unwrap();
    }

    #[test]
    fn lambda_scale_uses_universal_level() {
        let c = ExperimentConfig::default();
        let pens = c.penalties_for(32, 10, 0.5).unwrap();
        let l = 2.5 * 0.5 * (2.0 * (10f64).ln() / 32.0).sqrt();
        assert!(pens.iter().all(|p| (p.lambda() - l).abs() < 1e-12));
        assert_eq!(penalty_tag(&pens[3]), "mcp_g3");
    }
}

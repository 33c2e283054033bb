//! The theorem suite behind `verify`: replications run on worker threads and
//! are merged in replication order, so the CSV does not depend on `jobs`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use concavereg_core::penalty::{Family, Penalty};
use concavereg_core::simulate::{gen_instance, Instance};
use concavereg_core::solvers::{self, Solution};
use concavereg_core::verify::{self, Context, Status, TheoremReport, VerifyOptions};
use serde::Serialize;

use crate::config::{penalty_tag, ExperimentConfig, TheoremSet};
use crate::error::{AppError, AppResult};
use crate::io;

/// One CSV row: a report for one (replication, theorem, penalty).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub replication: usize,
    pub seed: u64,
    pub theorem: String,
    pub penalty: String,
    pub status: &'static str,
    pub passed: bool,
    pub bound: f64,
    pub observed: f64,
    pub slack: f64,
    /// name=value:ok|fail, separated by ';'
    pub premises: String,
    pub checks: String,
    pub notes: String,
}

impl Row {
    fn new(rep: usize, seed: u64, tag: &str, r: &TheoremReport) -> Row {
        let flag = |b: bool| if b { "ok" } else { "fail" };
        Row {
            replication: rep,
            seed,
            theorem: r.theorem_id.clone(),
            penalty: tag.to_string(),
            status: r.status.name(),
            passed: r.passed,
            bound: r.bound,
            observed: r.observed,
            slack: r.slack(),
            premises: r.premises.iter().map(|p| format!("{}={}:{}", p.name, p.value, flag(p.satisfied))).collect::<Vec<_>>().join(";"),
            checks: r.checks.iter().map(|c| format!("{}={}<={}:{}", c.name, c.observed, c.bound, flag(c.holds))).collect::<Vec<_>>().join(";"),
            notes: r.witness.join(";"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Replication {
    pub rows: Vec<Row>,
    pub reports: Vec<(String, TheoremReport)>,
    /// (penalty tag, null consistency holds)
    pub null: Vec<(String, bool)>,
}

pub fn replication_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

pub fn make_instance(cfg: &ExperimentConfig, seed: u64) -> AppResult<Instance> {
    if let Some(d) = &cfg.data {
        return io::instance_from_data(&d.x, &d.y, d.beta.as_deref(), d.sigma);
    }
    let s = &cfg.instance;
    Ok(gen_instance(s.n, s.p, s.s, &s.sigma, &s.beta, s.noise_sigma, s.noise, seed)?)
}

pub fn verify_options(cfg: &ExperimentConfig) -> VerifyOptions {
    VerifyOptions { solver: cfg.solver_options, ..Default::default() }
}

// two local solutions, their union budget m and a κ inside (κ*, κ₋(m + |S|)) when possible
fn local_distance(ctx: &mut Context, pen: &Penalty, a: &Solution, b: &Solution) -> AppResult<TheoremReport> {
    let s = ctx.inst.support.clone();
    let union = a.support.union(&b.support).len();
    let m = union.saturating_sub(s.len());
    let km = ctx.kappa_minus(m + s.len())?;
    let kstar = pen.max_concavity();
    let kappa = if kstar > 0.0 && kstar < km { kstar } else { 0.5 * km.min(1e6) };
    Ok(verify::check_local_distance(ctx, a, b, pen, &s, m, kappa)?)
}

pub fn run_replication(cfg: &ExperimentConfig, rep: usize, base_seed: u64) -> AppResult<Replication> {
    let seed = replication_seed(base_seed, rep);
    let inst = make_instance(cfg, seed)?;
    if cfg.data.as_ref().is_some_and(|d| d.beta.is_none()) {
        return Err(AppError::Config("the theorem suites need data.beta".into()));
    }
    let eta = cfg.eta;
    let sets = &cfg.theorems;
    let has = |t: TheoremSet| sets.contains(&t);
    let opts = cfg.solver_options;
    let mut ctx = Context::new(&inst, verify_options(cfg));
    let mut out = Replication::default();
    let push = |out: &mut Replication, tag: &str, reps: Vec<TheoremReport>| {
        for r in reps {
            out.rows.push(Row::new(rep, seed, tag, &r));
            out.reports.push((tag.to_string(), r));
        }
    };
    if has(TheoremSet::Factor) {
        let xi = (1.0 + eta) / (1.0 - eta);
        let r = verify::check_factor_inequalities(&mut ctx, xi)?;
        push(&mut out, "-", vec![r]);
    }
    let (x, y) = (&inst.x, &inst.y);
    for pen in cfg.penalties_for(inst.n(), inst.p(), inst.sigma)? {
        let tag = penalty_tag(&pen);
        let nc = ctx.null_consistency(&pen, eta)?;
        out.null.push((tag.clone(), nc.holds));
        let needs_global = [TheoremSet::Estimation, TheoremSet::Sparsity, TheoremSet::L0, TheoremSet::Oracle, TheoremSet::Lemmas, TheoremSet::Props]
            .into_iter()
            .any(has);
        let global = if needs_global { Some(solvers::global_enumerate(x, y, &pen, None, &opts)?) } else { None };
        let lasso = solvers::lasso_cd(x, y, pen.lambda(), &opts)?;
        let from_lasso = solvers::local_descent(x, y, &pen, &lasso.beta, &opts)?;
        let g = || global.as_ref().unwrap();
        if has(TheoremSet::Estimation) {
            push(&mut out, &tag, verify::check_estimation_bounds(&mut ctx, g(), &pen, eta, &[1.0, 2.0])?);
        }
        if has(TheoremSet::Sparsity) {
            push(&mut out, &tag, verify::check_sparsity_bound(&mut ctx, g(), &pen, eta, None)?);
        }
        if has(TheoremSet::L0) && pen.family() == Family::L0 {
            push(&mut out, &tag, verify::check_l0_results(&mut ctx, g(), &pen, eta)?);
        }
        if has(TheoremSet::LocalDistance) {
            let from_zero = solvers::local_descent(x, y, &pen, &vec![0.0; inst.p()], &opts)?;
            push(&mut out, &tag, vec![local_distance(&mut ctx, &pen, &from_zero, &from_lasso)?]);
        }
        if has(TheoremSet::Oracle) {
            let mut others = vec![from_lasso.clone()];
            if pen.family() != Family::Bridge || cfg.bridge_fallback {
                if let Ok(ms) = solvers::multistage(x, y, &pen, None, cfg.bridge_fallback, &opts) {
                    others.push(ms);
                }
            }
            push(&mut out, &tag, verify::check_oracle_local(&mut ctx, &pen, eta, g(), &others)?);
        }
        if has(TheoremSet::Lasso) {
            push(&mut out, &tag, verify::check_lasso_approx_global(&mut ctx, &pen, eta, &lasso, &from_lasso)?);
        }
        if has(TheoremSet::Lemmas) {
            push(&mut out, &tag, verify::check_lemmas(&mut ctx, g(), &pen, eta)?);
        }
        if has(TheoremSet::Props) {
            let xi = (1.0 + eta) / (1.0 - eta);
            let mut reps = vec![verify::check_penalty_props(&pen)];
            if !inst.support.is_empty() {
                reps.push(verify::check_rif_cif(&mut ctx, &pen, 1.0, xi)?);
            }
            push(&mut out, &tag, reps);
        }
    }
    Ok(out)
}

/// Runs every replication on up to `jobs` threads; results come back in
/// replication order. The first error (in replication order) is returned.
pub fn run_suite(cfg: &ExperimentConfig, base_seed: u64) -> AppResult<Vec<Replication>> {
    let reps = if cfg.data.is_some() { 1 } else { cfg.replications };
    let jobs = cfg.jobs.clamp(1, reps);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<AppResult<Replication>>>> = (0..reps).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                if r >= reps {
                    break;
                }
                let res = run_replication(cfg, r, base_seed);
                *slots[r].lock().unwrap() = Some(res);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every replication ran")).collect()
}

/// 95% Wilson score interval for k successes out of n.
pub fn wilson(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let ph = k as f64 / nf;
    let d = 1.0 + z * z / nf;
    let c = (ph + z * z / (2.0 * nf)) / d;
    let h = z / d * (ph * (1.0 - ph) / nf + z * z / (4.0 * nf * nf)).sqrt();
    ((c - h).max(0.0), (c + h).min(1.0))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatusCounts {
    pub passed: usize,
    pub premise_failed: usize,
    pub violated: usize,
    pub not_applicable: usize,
    pub inconclusive: usize,
}

impl StatusCounts {
    fn add(&mut self, s: Status) {
        match s {
            Status::Passed => self.passed += 1,
            Status::PremiseFailed => self.premise_failed += 1,
            Status::Violated => self.violated += 1,
            Status::NotApplicable => self.not_applicable += 1,
            Status::Inconclusive => self.inconclusive += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frequency {
    pub trials: usize,
    pub successes: usize,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Frequency {
    fn new(successes: usize, trials: usize) -> Frequency {
        let (lo, hi) = wilson(successes, trials);
        Frequency { trials, successes, frequency: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 }, wilson_low: lo, wilson_high: hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub replications: usize,
    pub seed: u64,
    pub eta: f64,
    pub total: StatusCounts,
    pub by_theorem: BTreeMap<String, StatusCounts>,
    /// fraction of replications where b = 0 minimizes the inflated-noise objective
    pub null_consistency: BTreeMap<String, Frequency>,
    /// fraction of rows whose premises all hold
    pub premises_hold: BTreeMap<String, Frequency>,
}

pub fn summarize(cfg: &ExperimentConfig, seed: u64, reps: &[Replication]) -> Summary {
    let mut total = StatusCounts::default();
    let mut by_theorem: BTreeMap<String, StatusCounts> = BTreeMap::new();
    let mut prem: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut null: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for rep in reps {
        for (tag, r) in &rep.reports {
            total.add(r.status);
            by_theorem.entry(r.theorem_id.clone()).or_default().add(r.status);
            let key = format!("{}/{}", r.theorem_id, tag);
            let e = prem.entry(key).or_default();
            e.1 += 1;
            e.0 += r.premises.iter().all(|p| p.satisfied) as usize;
        }
        for (tag, holds) in &rep.null {
            let e = null.entry(tag.clone()).or_default();
            e.1 += 1;
            e.0 += *holds as usize;
        }
    }
    Summary {
        replications: reps.len(),
        seed,
        eta: cfg.eta,
        total,
        by_theorem,
        null_consistency: null.into_iter().map(|(k, (s, n))| (k, Frequency::new(s, n))).collect(),
        premises_hold: prem.into_iter().map(|(k, (s, n))| (k, Frequency::new(s, n))).collect(),
    }
}

pub fn rows_csv(reps: &[Replication]) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rep in reps {
        for row in &rep.rows {
            w.serialize(row).map_err(|e| AppError::Config(e.to_string()))?;
        }
    }
    w.into_inner().map_err(|e| AppError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 8/10 at 95%: (0.4902, 0.9433)
        let (lo, hi) = wilson(8, 10);
        assert!((lo - 0.4902).abs() < 1e-4 && (hi - 0.9433).abs() < 1e-4);
        assert_eq!(wilson(0, 0), (0.0, 1.0));
        let (lo, hi) = wilson(0, 20);
        assert!(lo == 0.0 && hi > 0.0 && hi < 0.2);
    }

    #[test]
    fn job_count_does_not_change_rows() {
        let cfg = ExperimentConfig {
            replications: 3,
            instance: crate::config::InstanceSpec { n: 20, p: 5, s: 1, ..Default::default() },
            theorems: vec![TheoremSet::Estimation, TheoremSet::Lemmas],
            ..Default::default()
        };
        let a = rows_csv(&run_suite(&ExperimentConfig { jobs: 1, ..cfg.clone() }, 5).unwrap()).unwrap();
        let b = rows_csv(&run_suite(&ExperimentConfig { jobs: 3, ..cfg }, 5).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}

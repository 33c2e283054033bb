use std::path::Path;

use concavereg_core::design::{self, cone::ConeOptions, DiagnoseRequest, EigenOptions, SupportSet};
use concavereg_core::solvers::{self, Solution, SolverKind};
use serde::Serialize;

use crate::config::{penalty_tag, ExperimentConfig};
use crate::error::{AppError, AppResult};
use crate::io;
use crate::suite;

fn ensure_dirs(out: &Path) -> AppResult<()> {
    for d in ["solutions", "diagnostics", "reports"] {
        let p = out.join(d);
        std::fs::create_dir_all(&p).map_err(|e| AppError::io(&p, e))?;
    }
    Ok(())
}

/// Solves every (penalty, solver) pair and writes one Solution JSON each.
pub fn cmd_solve(cfg: &ExperimentConfig) -> AppResult<Vec<(String, Solution)>> {
    cfg.validate()?;
    let inst = suite::make_instance(cfg, cfg.seed.unwrap_or(0))?;
    ensure_dirs(&cfg.out)?;
    let (x, y) = (&inst.x, &inst.y);
    let opts = &cfg.solver_options;
    let mut written = Vec::new();
    for pen in cfg.penalties_for(inst.n(), inst.p(), inst.sigma)? {
        for &kind in &cfg.solvers {
            let sol = match kind {
                SolverKind::LassoCd => solvers::lasso_cd(x, y, pen.lambda(), opts)?,
                SolverKind::Multistage => solvers::multistage(x, y, &pen, None, cfg.bridge_fallback, opts)?,
                SolverKind::LocalDescent => {
                    let start = solvers::lasso_cd(x, y, pen.lambda(), opts)?;
                    solvers::local_descent(x, y, &pen, &start.beta, opts)?
                }
                SolverKind::GlobalEnumerate => solvers::global_enumerate(x, y, &pen, None, opts)?,
                SolverKind::OracleLse => solvers::oracle_lse(x, y, &inst.support, &pen, opts)?,
            };
            let name = format!("{}__{}", penalty_tag(&pen), kind.name());
            io::write_json(&cfg.out.join("solutions").join(format!("{name}.json")), &sol)?;
            written.push((name, sol));
        }
    }
    Ok(written)
}

#[derive(Serialize)]
struct KappaRow {
    m: usize,
    kappa_minus: f64,
    kappa_plus: f64,
    exact: bool,
}

/// Regularity report JSON plus a κ±(m) table.
pub fn cmd_diagnose(cfg: &ExperimentConfig) -> AppResult<design::RegularityReport> {
    cfg.validate()?;
    let inst = suite::make_instance(cfg, cfg.seed.unwrap_or(0))?;
    ensure_dirs(&cfg.out)?;
    let d = &cfg.diagnose;
    let p = inst.p();
    let support = match &d.support {
        Some(ix) => SupportSet::new(ix.clone(), p)?,
        None => inst.support.clone(),
    };
    let pens = cfg.penalties_for(inst.n(), p, inst.sigma)?;
    let (signs, beta_o) = if support.is_empty() {
        (None, None)
    } else {
        let signs = support.indices().iter().map(|&j| if inst.beta[j] < 0.0 { -1.0 } else { 1.0 }).collect();
        let bo = solvers::oracle_coefficients(&inst.x, &inst.y, &support).ok();
        (Some(signs), bo.map(|b| support.indices().iter().map(|&j| b[j]).collect()))
    };
    let mut eigen = EigenOptions::default();
    let mut cone = ConeOptions::default();
    if d.heuristic {
        eigen.cap = 0;
        cone.force_sampled = true;
    }
    let req = DiagnoseRequest {
        m_max: d.m_max.unwrap_or(p).min(p),
        xi: d.xi,
        support,
        q_list: d.q_list.clone(),
        penalty: pens.first().copied(),
        signs,
        beta_o,
        eigen,
        cone,
    };
    let report = design::diagnose(&inst.x, &req)?;
    let dir = cfg.out.join("diagnostics");
    io::write_json(&dir.join("regularity.json"), &report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for k in &report.kappa {
        w.serialize(KappaRow { m: k.m, kappa_minus: k.kappa_minus, kappa_plus: k.kappa_plus, exact: k.exact })
            .map_err(|e| AppError::Config(e.to_string()))?;
    }
    io::write_file(&dir.join("kappa.csv"), &w.into_inner().map_err(|e| AppError::Config(e.to_string()))?)?;
    Ok(report)
}

#[derive(Serialize)]
struct RunMeta {
    unix_time: u64,
    jobs: usize,
    config: ExperimentConfig,
}

/// Runs the theorem suite. Errors with `Violated` when any claim failed with its premises met.
pub fn cmd_verify(cfg: &ExperimentConfig) -> AppResult<suite::Summary> {
    cfg.validate()?;
    let seed = cfg.seed.ok_or_else(|| AppError::Config("verify needs --seed".into()))?;
    let reps = suite::run_suite(cfg, seed)?;
    ensure_dirs(&cfg.out)?;
    let dir = cfg.out.join("reports");
    io::write_file(&dir.join("verify.csv"), &suite::rows_csv(&reps)?)?;
    for (i, r) in reps.iter().enumerate() {
        let reports: Vec<_> = r.reports.iter().map(|(tag, rep)| serde_json::json!({"penalty": tag, "report": rep})).collect();
        io::write_json(&dir.join("json").join(format!("replication_{i:04}.json")), &reports)?;
    }
    let summary = suite::summarize(cfg, seed, &reps);
    io::write_json(&dir.join("summary.json"), &summary)?;
    let unix_time = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    io::write_json(&dir.join("meta.json"), &RunMeta { unix_time, jobs: cfg.jobs, config: cfg.clone() })?;
    if summary.total.violated > 0 {
        return Err(AppError::Violated(summary.total.violated));
    }
    Ok(summary)
}

/// Writes one generated instance directory per replication under out/instances.
pub fn cmd_gen(cfg: &ExperimentConfig, binary: bool) -> AppResult<Vec<std::path::PathBuf>> {
    cfg.validate()?;
    if cfg.data.is_some() {
        return Err(AppError::Config("gen writes synthetic instances; remove the data section".into()));
    }
    let base = cfg.seed.unwrap_or(0);
    let mut dirs = Vec::new();
    for r in 0..cfg.replications {
        let seed = suite::replication_seed(base, r);
        let inst = suite::make_instance(cfg, seed)?;
        let dir = cfg.out.join("instances").join(format!("seed_{seed}"));
        io::write_instance(&dir, &inst, binary)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

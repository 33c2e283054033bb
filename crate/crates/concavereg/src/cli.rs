use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use concavereg_core::penalty::{Family, PenaltyConfig};
use concavereg_core::solvers::SolverKind;

use crate::commands;
use crate::config::{DataPaths, ExperimentConfig};
use crate::error::{AppError, AppResult};

#[derive(Debug, Parser)]
#[command(name = "concavereg", version, about = "Concave penalized least squares: solve, diagnose, verify, generate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON experiment config; flags override its fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// penalty family: l0, l1, capped_l1, mcp, scad, bridge
    #[arg(long, global = true)]
    pub penalty: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Bridge exponent
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// design matrix file (CSV or CSPD); replaces the synthetic instance
    #[arg(long, global = true, requires = "y")]
    pub x: Option<PathBuf>,
    #[arg(long, global = true)]
    pub y: Option<PathBuf>,
    #[arg(long, global = true)]
    pub beta: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit every configured (penalty, solver) pair
    Solve {
        /// lasso_cd, multistage, local_descent, global_enumerate, oracle_lse
        #[arg(long = "solver")]
        solvers: Vec<String>,
        /// allow multistage on Bridge
        #[arg(long)]
        fallback: bool,
    },
    /// Sparse eigenvalues, cone factors and irrepresentable quantities
    Diagnose {
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        xi: Option<f64>,
        /// sample instead of enumerating (flagged in the report)
        #[arg(long)]
        heuristic: bool,
    },
    /// Run the theorem suite
    Verify,
    /// Write synthetic instances
    Gen {
        /// store X in the CSPD binary format
        #[arg(long)]
        binary: bool,
    },
}

fn default_gamma(f: Family) -> Option<f64> {
    match f {
        Family::CappedL1 => Some(4.0),
        Family::Mcp => Some(3.0),
        Family::Scad => Some(3.7),
        _ => None,
    }
}

/// Loads the config file (or defaults) and applies the flags.
pub fn resolve(common: &Common) -> AppResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(e) = common.eta {
        cfg.eta = e;
    }
    if let Some(r) = common.replications {
        cfg.replications = r;
    }
    if let Some(name) = &common.penalty {
        let family = Family::parse(name)?;
        let gamma = common.gamma.or_else(|| default_gamma(family));
        let alpha = if family == Family::Bridge { Some(common.alpha.unwrap_or(0.5)) } else { None };
        cfg.penalties = vec![PenaltyConfig { family, lambda: common.lambda.unwrap_or(1.0), gamma, alpha }];
    } else {
        for p in &mut cfg.penalties {
            if p.gamma.is_some() {
                p.gamma = common.gamma.or(p.gamma);
            }
            if p.alpha.is_some() {
                p.alpha = common.alpha.or(p.alpha);
            }
            if let Some(l) = common.lambda {
                p.lambda = l;
            }
        }
    }
    if common.lambda.is_some() {
        cfg.lambda_scale = None;
    }
    if let (Some(x), Some(y)) = (&common.x, &common.y) {
        let sigma = cfg.data.as_ref().map_or(1.0, |d| d.sigma);
        cfg.data = Some(DataPaths { x: x.clone(), y: y.clone(), beta: common.beta.clone(), sigma });
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> AppResult<()> {
    let mut cfg = resolve(&cli.common)?;
    match &cli.command {
        Command::Solve { solvers, fallback } => {
            if !solvers.is_empty() {
                cfg.solvers = solvers.iter().map(|s| SolverKind::parse(s)).collect::<Result<_, _>>()?;
            }
            cfg.bridge_fallback |= fallback;
            for (name, sol) in commands::cmd_solve(&cfg)? {
                println!("{name}: objective {:.6e}, support {:?}", sol.objective, sol.support.indices());
            }
        }
        Command::Diagnose { m_max, xi, heuristic } => {
            if m_max.is_some() {
                cfg.diagnose.m_max = *m_max;
            }
            if let Some(x) = xi {
                cfg.diagnose.xi = *x;
            }
            cfg.diagnose.heuristic |= heuristic;
            let r = commands::cmd_diagnose(&cfg)?;
            println!("n={} p={} |S|={} heuristic={}", r.n, r.p, r.support.len(), r.heuristic);
        }
        Command::Verify => {
            let s = match commands::cmd_verify(&cfg) {
                Ok(s) => s,
                Err(AppError::Violated(k)) => {
                    eprintln!("see {}", cfg.out.join("reports").display());
                    return Err(AppError::Violated(k));
                }
                Err(e) => return Err(e),
            };
            let t = &s.total;
            println!(
                "{} replications: passed {}, premise_failed {}, violated {}, not_applicable {}, inconclusive {}",
                s.replications, t.passed, t.premise_failed, t.violated, t.not_applicable, t.inconclusive
            );
            for (tag, f) in &s.null_consistency {
                println!("null consistency {tag}: {}/{} [{:.3}, {:.3}]", f.successes, f.trials, f.wilson_low, f.wilson_high);
            }
        }
        Command::Gen { binary } => {
            for d in commands::cmd_gen(&cfg, *binary)? {
                println!("{}", d.display());
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

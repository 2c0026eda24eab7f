//! Library backing the command-line front end: oracle construction from
//! config, the plan/run commands, benchmark suites, and reference-set
//! generation. The binary in `main.rs` only parses arguments and maps
//! errors to exit codes.

pub mod bench;
pub mod config;
pub mod refs;

use std::path::{Path, PathBuf};

use thiserror::Error;

use chebmin::driver::{
    self, minimizers_adaptive, minimizers_regular, minimizers_split, AdaptiveOptions, DriverError,
    RunOptions, RunResult, SamplingMode, SplitRun,
};
use chebmin::dlsp::FitMethod;
use chebmin::oracle::{
    self, make_benchmark, rescale, with_noise, Benchmark, BoxDomain, NoiseModel, Oracle,
};
use chebmin::planner::{self, Plan, PlanError};
use chebmin::psolve::{CriticalPoint, SolveOptions, SolveStatus};

use config::{Method, Mode, OracleKind, RunConfig, Sampling};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error("expression error: {0}")]
    Expr(#[from] oracle::expr::ExprError),
    #[error(transparent)]
    Fit(#[from] chebmin::dlsp::DlspError),
    #[error("io error at {path}: {err}")]
    Io { path: String, err: String },
    #[error("{0}")]
    Other(String),
}

/// Process exit codes (a stable contract):
/// 0 success, 1 uncategorized failure, 2 infeasible plan,
/// 3 non-finite solution set, 4 budget or round cap exceeded,
/// 64 bad usage or malformed config.
pub fn exit_code_for(err: &CliError) -> i32 {
    match err {
        CliError::Config(_) => 64,
        CliError::Plan(PlanError::InvalidParameter(_)) => 64,
        CliError::Plan(PlanError::Infeasible(_)) => 2,
        CliError::Driver(DriverError::Plan(PlanError::Infeasible(_))) => 2,
        CliError::Driver(DriverError::Plan(PlanError::InvalidParameter(_))) => 64,
        CliError::Driver(DriverError::SolveFailed { status, .. }) => match status {
            SolveStatus::FailNonFinite => 3,
            SolveStatus::BudgetExceeded => 4,
            SolveStatus::Complete => 1,
        },
        CliError::Driver(DriverError::MaxRoundsExceeded { .. }) => 4,
        CliError::Expr(_) | CliError::Oracle(_) => 64,
        CliError::Fit(_) => 1,
        _ => 1,
    }
}

/// The oracle on [-1,1]^n plus the original box it was pulled back from.
pub struct BuiltOracle {
    pub oracle: Oracle,
    pub domain: BoxDomain,
    pub dim: usize,
}

pub fn build_oracle(cfg: &RunConfig) -> Result<BuiltOracle, CliError> {
    let (raw, default_domain, dim) = match cfg.oracle.kind {
        OracleKind::Builtin => {
            let name = cfg.oracle.name.as_deref().expect("validated");
            let bench: Benchmark = name.parse()?;
            let dim = bench.dim();
            let domain = cfg
                .oracle
                .domain
                .clone()
                .map(domain_from_pairs)
                .transpose()?
                .unwrap_or_else(|| bench.default_domain());
            return Ok(BuiltOracle {
                oracle: apply_noise(make_benchmark(bench, &domain)?, cfg),
                domain,
                dim,
            });
        }
        OracleKind::Expr => {
            let dim = cfg.oracle.dim.expect("validated");
            let parsed =
                oracle::expr::parse_expr(cfg.oracle.expr.as_deref().expect("validated"), dim)?;
            (
                Oracle::from_fn(dim, move |x| parsed.eval(x)),
                BoxDomain::unit(dim),
                dim,
            )
        }
        OracleKind::Subprocess => {
            let dim = cfg.oracle.dim.expect("validated");
            let cmd = cfg.oracle.command.clone().expect("validated");
            (
                oracle::subproc::subprocess_oracle(dim, &cmd)?,
                BoxDomain::unit(dim),
                dim,
            )
        }
    };
    let domain = cfg
        .oracle
        .domain
        .clone()
        .map(domain_from_pairs)
        .transpose()?
        .unwrap_or(default_domain);
    if domain.dim() != dim {
        return Err(CliError::Other(format!(
            "domain has {} axes but oracle dimension is {dim}",
            domain.dim()
        )));
    }
    Ok(BuiltOracle {
        oracle: apply_noise(rescale(&raw, &domain)?, cfg),
        domain,
        dim,
    })
}

fn apply_noise(o: Oracle, cfg: &RunConfig) -> Oracle {
    match cfg.oracle.noise_seed {
        Some(seed) => with_noise(&o, NoiseModel::UniformBounded { seed }),
        None => o,
    }
}

fn domain_from_pairs(pairs: Vec<[f64; 2]>) -> Result<BoxDomain, CliError> {
    let lo = pairs.iter().map(|p| p[0]).collect();
    let hi = pairs.iter().map(|p| p[1]).collect();
    Ok(BoxDomain::new(lo, hi)?)
}

fn fit_method(m: Method) -> FitMethod {
    match m {
        Method::Orthogonal => FitMethod::Orthogonal,
        Method::NormalEq => FitMethod::NormalEq,
    }
}

fn sampling_mode(cfg: &RunConfig) -> SamplingMode {
    match cfg.run.sampling {
        Sampling::Grid => SamplingMode::Grid,
        Sampling::Iid => SamplingMode::Iid { seed: cfg.run.seed },
    }
}

pub fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        method: fit_method(cfg.run.method),
        solve: SolveOptions {
            budget: cfg.run.budget,
            ..SolveOptions::default()
        },
        polish: cfg.run.polish,
        polish_iters: 300,
    }
}

/// Resolves the plan: forced when a degree is given, else from the
/// regularity constants (directly or via kappa and the Jackson constant).
pub fn resolve_plan(cfg: &RunConfig, n: usize) -> Result<Plan, CliError> {
    let r = &cfg.run;
    if let Some(d) = r.degree {
        let side = 2 * (d as u64 + 1);
        let k = r.samples.unwrap_or_else(|| side.pow(n as u32));
        return Ok(Plan::forced(n, r.eps, d, r.eta, k as u128));
    }
    let m = r
        .m
        .unwrap_or_else(|| 3u32.max((planner::beta() * n as f64 + 1.0).ceil() as u32));
    let lambda = r.lambda.unwrap_or(1.0);
    let (a1, a2) = match (r.a1, r.a2) {
        (Some(a1), Some(a2)) => (a1, a2),
        _ => {
            let kappa = r.kappa.ok_or_else(|| {
                CliError::Other(
                    "plan needs either a1/a2 or kappa/c_nm regularity constants".to_string(),
                )
            })?;
            let c_nm = r.c_nm.unwrap_or(1.0);
            planner::default_constants(n, m, kappa, r.delta, c_nm)?
        }
    };
    Ok(planner::plan(n, m, r.eps, r.alpha, r.delta, lambda, a1, a2)?)
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<Plan, CliError> {
    let built = build_oracle(cfg)?;
    resolve_plan(cfg, built.dim)
}

/// Everything a run produces, already mapped to original coordinates
/// where points are concerned.
pub struct RunArtifacts {
    pub result_json: String,
    pub minimizers_csv: String,
    pub critical_csv: String,
    pub status: SolveStatus,
    pub minimizer_count: usize,
}

enum RunOutput {
    Single(RunResult),
    Split(SplitRun),
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let built = build_oracle(cfg)?;
    let opts = run_options(cfg);
    let mode = sampling_mode(cfg);
    let output = match cfg.run.mode {
        Mode::Regular => {
            let plan = resolve_plan(cfg, built.dim)?;
            if cfg.run.split > 1 {
                RunOutput::Split(minimizers_split(
                    &built.oracle,
                    &plan,
                    cfg.run.split,
                    mode,
                    &opts,
                )?)
            } else {
                RunOutput::Single(minimizers_regular(&built.oracle, &plan, mode, &opts)?)
            }
        }
        Mode::Adaptive => {
            let a = AdaptiveOptions {
                tol: cfg.run.tol,
                max_rounds: cfg.run.max_rounds,
                delta: cfg.run.delta,
                sample_cap: cfg.run.sample_cap.min(cfg.run.samples.unwrap_or(u64::MAX)),
                mode,
                run: opts.clone(),
            };
            RunOutput::Single(minimizers_adaptive(
                &built.oracle,
                cfg.run.eps,
                cfg.run.alpha,
                &a,
            )?)
        }
    };
    let (status, critical, minimizers, polished, json) = match &output {
        RunOutput::Single(r) => (
            r.solve_status,
            r.all_critical.clone(),
            r.minimizers.clone(),
            r.polished.clone(),
            serde_json::to_string_pretty(r).expect("serializable result"),
        ),
        RunOutput::Split(s) => (
            s.status,
            s.merged_critical.clone(),
            s.minimizers.clone(),
            s.polished.clone(),
            serde_json::to_string_pretty(s).expect("serializable result"),
        ),
    };
    let minimizers_csv = minimizers_csv(&built.domain, &minimizers, polished.as_deref());
    let critical_csv = critical_csv(&built.domain, &critical);
    Ok(RunArtifacts {
        result_json: json,
        minimizers_csv,
        critical_csv,
        status,
        minimizer_count: minimizers.len(),
    })
}

fn minimizers_csv(
    domain: &BoxDomain,
    minimizers: &[Vec<f64>],
    polished: Option<&[Vec<f64>]>,
) -> String {
    let n = domain.dim();
    let mut s = String::new();
    for a in 0..n {
        s.push_str(&format!("x{},", a + 1));
    }
    if polished.is_some() {
        for a in 0..n {
            s.push_str(&format!("polished_x{},", a + 1));
        }
    }
    s.pop();
    s.push('\n');
    for (i, m) in minimizers.iter().enumerate() {
        let orig = domain.from_unit(m);
        let mut row: Vec<String> = orig.iter().map(|v| format!("{v:.17e}")).collect();
        if let Some(p) = polished {
            row.extend(domain.from_unit(&p[i]).iter().map(|v| format!("{v:.17e}")));
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn critical_csv(domain: &BoxDomain, points: &[CriticalPoint]) -> String {
    let n = domain.dim();
    let mut s = String::new();
    for a in 0..n {
        s.push_str(&format!("x{},", a + 1));
    }
    s.push_str("kind,certified_radius,residual,boundary\n");
    for p in points {
        let orig = domain.from_unit(&p.location);
        let mut row: Vec<String> = orig.iter().map(|v| format!("{v:.17e}")).collect();
        row.push(format!("{:?}", p.kind));
        row.push(format!("{:.3e}", p.certified_radius));
        row.push(format!("{:.3e}", p.residual));
        row.push(format!("{}", p.boundary_proximal));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Writes a file atomically (temp file in the target directory, then
/// rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        err: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

pub fn write_run_artifacts(out_dir: &str, art: &RunArtifacts) -> Result<(), CliError> {
    let dir = PathBuf::from(out_dir);
    write_atomic(&dir.join("run_result.json"), &art.result_json)?;
    write_atomic(&dir.join("minimizers.csv"), &art.minimizers_csv)?;
    write_atomic(&dir.join("critical_points.csv"), &art.critical_csv)?;
    Ok(())
}

/// Initializes the global worker pool; later calls are ignored.
pub fn set_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

/// Maps a completed run status to the documented exit code.
pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Complete => 0,
        SolveStatus::FailNonFinite => 3,
        SolveStatus::BudgetExceeded => 4,
    }
}

pub use driver::capture_stats;

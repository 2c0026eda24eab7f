use clap::{Args, Parser, Subcommand};

use chebmin_cli::bench::{run_suite, write_suite_files, BenchOptions, Suite};
use chebmin_cli::config::{Method, Mode, Overrides, RunConfig, Sampling};
use chebmin_cli::{
    cmd_plan, cmd_run, exit_code_for, refs, set_threads, status_exit_code, write_run_artifacts,
    CliError,
};

/// Enumerate all local minimizers of a black-box function on a box.
#[derive(Parser)]
#[command(name = "chebmin", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the degree/noise/sample budget and print it as JSON.
    Plan(RunArgs),
    /// Run the pipeline and write result files.
    Run(RunArgs),
    /// Reproduce a benchmark capture table.
    Bench(BenchArgs),
    /// Regenerate the brute-force reference sets.
    GenRefs(GenRefsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<String>,
    /// Builtin oracle name (shorthand for a minimal config).
    #[arg(long)]
    oracle: Option<String>,
    /// Expression oracle source.
    #[arg(long)]
    expr: Option<String>,
    /// Oracle dimension (expr/subprocess oracles).
    #[arg(long)]
    dim: Option<usize>,
    /// Domain box, formatted "lo,hi;lo,hi;..." one pair per axis.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Force the approximant degree, bypassing the planner.
    #[arg(long)]
    degree: Option<u32>,
    /// Total sample budget.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Split the box into this many cells per axis.
    #[arg(long)]
    split: Option<usize>,
    /// Polish found minimizers by quasi-Newton descent.
    #[arg(long)]
    polish: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Sampling mode: grid or iid.
    #[arg(long)]
    sampling: Option<String>,
    /// Fit method: orthogonal or normal-eq.
    #[arg(long)]
    method: Option<String>,
    /// Forced oracle noise bound (with --degree).
    #[arg(long)]
    eta: Option<f64>,
    /// Adaptive stop tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Solver cell budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Inject seeded uniform-bounded noise into the oracle.
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Hessian lower bound (regularity constant).
    #[arg(long)]
    lambda: Option<f64>,
    /// Theorem constant A1.
    #[arg(long)]
    a1: Option<f64>,
    /// Theorem constant A2.
    #[arg(long)]
    a2: Option<f64>,
    /// Smoothness order m.
    #[arg(long)]
    m: Option<u32>,
    /// Derivative bound kappa (derives A1/A2 with c_nm).
    #[arg(long)]
    kappa: Option<f64>,
    /// Jackson approximation constant.
    #[arg(long)]
    c_nm: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite: polyrecover, deuflhard2d, dejong, holder, deuflhard4d,
    /// trefethen.
    #[arg(long)]
    suite: String,
    /// Output directory for the capture CSVs.
    #[arg(long, default_value = "out")]
    out: String,
    /// Directory with the checked-in reference sets.
    #[arg(long)]
    data: Option<String>,
    /// Degree ladder override, comma separated.
    #[arg(long)]
    degrees: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenRefsArgs {
    /// Target directory for the reference CSVs.
    #[arg(long, default_value = "crates/cli/data")]
    out: String,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are normal exits; anything else is a usage error
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(64);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let code = match cli.command {
        Command::Plan(args) => do_plan(args),
        Command::Run(args) => do_run(args),
        Command::Bench(args) => do_bench(args),
        Command::GenRefs(args) => do_gen_refs(args),
    };
    std::process::exit(code);
}

fn fail(err: CliError) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(&err)
}

fn do_plan(args: RunArgs) -> i32 {
    match assemble_config(&args).and_then(|cfg| cmd_plan(&cfg)) {
        Ok(plan) => {
            println!("{}", serde_json::to_string_pretty(&plan).expect("plan json"));
            if plan.d == 2 && !plan.forced {
                eprintln!("note: degree clamped to the minimum of 2");
            }
            0
        }
        Err(e) => fail(e),
    }
}

fn do_run(args: RunArgs) -> i32 {
    let cfg = match assemble_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    set_threads(cfg.run.threads);
    match cmd_run(&cfg) {
        Ok(art) => {
            if let Err(e) = write_run_artifacts(&cfg.output.dir, &art) {
                return fail(e);
            }
            eprintln!(
                "{} minimizer(s); results in {}",
                art.minimizer_count, cfg.output.dir
            );
            status_exit_code(art.status)
        }
        Err(e) => fail(e),
    }
}

fn do_bench(args: BenchArgs) -> i32 {
    set_threads(args.threads);
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let mut opts = BenchOptions::default();
    if let Some(d) = args.data {
        opts.data_dir = d.into();
    }
    if let Some(ds) = args.degrees {
        let parsed: Result<Vec<u32>, _> = ds.split(',').map(|t| t.trim().parse()).collect();
        match parsed {
            Ok(v) => opts.degrees = Some(v),
            Err(e) => return fail(CliError::Other(format!("bad --degrees: {e}"))),
        }
    }
    match run_suite(suite, &opts) {
        Ok(report) => {
            if let Err(e) = write_suite_files(&args.out, &report) {
                return fail(e);
            }
            for (name, _) in &report.files {
                eprintln!("wrote {}/{name}", args.out);
            }
            0
        }
        Err(e) => fail(e),
    }
}

fn do_gen_refs(args: GenRefsArgs) -> i32 {
    set_threads(args.threads);
    match refs::generate_all(std::path::Path::new(&args.out)) {
        Ok(()) => {
            eprintln!("reference sets written to {}", args.out);
            0
        }
        Err(e) => fail(e),
    }
}

/// Builds the effective config: file (when given) or a minimal builtin
/// oracle config, with flag overrides applied last.
fn assemble_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = if let Some(path) = &args.config {
        RunConfig::from_path(path)?
    } else if args.oracle.is_some() || args.expr.is_some() {
        let mut toml = String::new();
        toml.push_str("[oracle]\n");
        if let Some(name) = &args.oracle {
            toml.push_str(&format!("kind = \"builtin\"\nname = \"{name}\"\n"));
        } else {
            toml.push_str("kind = \"expr\"\n");
        }
        let mut cfg = RunConfig::from_toml(&toml).map_err(|e| {
            if args.expr.is_some() {
                // fill in below; dim/expr arrive from flags
                CliError::Config(e)
            } else {
                CliError::Config(e)
            }
        });
        if let (Err(_), Some(expr)) = (&cfg, &args.expr) {
            // expr configs need the expression inline to validate
            let dim = args.dim.ok_or_else(|| {
                CliError::Other("--expr needs --dim".to_string())
            })?;
            let toml = format!(
                "[oracle]\nkind = \"expr\"\nexpr = {expr:?}\ndim = {dim}\n"
            );
            cfg = RunConfig::from_toml(&toml).map_err(CliError::Config);
        }
        cfg?
    } else {
        return Err(CliError::Other(
            "provide --config, --oracle, or --expr".to_string(),
        ));
    };
    if let Some(domain) = &args.domain {
        let mut pairs = Vec::new();
        for part in domain.split(';') {
            let mut it = part.split(',');
            let lo: f64 = it
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| CliError::Other(format!("bad domain spec: {domain}")))?;
            let hi: f64 = it
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| CliError::Other(format!("bad domain spec: {domain}")))?;
            pairs.push([lo, hi]);
        }
        cfg.oracle.domain = Some(pairs);
    }
    if let Some(d) = args.dim {
        cfg.oracle.dim = Some(d);
    }
    let parse_mode = |s: &str| -> Result<Mode, CliError> {
        match s {
            "regular" => Ok(Mode::Regular),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(CliError::Other(format!("unknown mode: {other}"))),
        }
    };
    let parse_sampling = |s: &str| -> Result<Sampling, CliError> {
        match s {
            "grid" => Ok(Sampling::Grid),
            "iid" => Ok(Sampling::Iid),
            other => Err(CliError::Other(format!("unknown sampling: {other}"))),
        }
    };
    let parse_method = |s: &str| -> Result<Method, CliError> {
        match s {
            "orthogonal" => Ok(Method::Orthogonal),
            "normal-eq" => Ok(Method::NormalEq),
            other => Err(CliError::Other(format!("unknown method: {other}"))),
        }
    };
    let ov = Overrides {
        mode: args.mode.as_deref().map(parse_mode).transpose()?,
        eps: args.eps,
        alpha: args.alpha,
        delta: args.delta,
        degree: args.degree,
        samples: args.samples,
        seed: args.seed,
        split: args.split,
        polish: args.polish.then_some(true),
        out: args.out.clone(),
        threads: args.threads,
        sampling: args.sampling.as_deref().map(parse_sampling).transpose()?,
        method: args.method.as_deref().map(parse_method).transpose()?,
        eta: args.eta,
        tol: args.tol,
        budget: args.budget,
        noise_seed: args.noise_seed,
    };
    cfg.apply(&ov);
    if let Some(v) = args.lambda {
        cfg.run.lambda = Some(v);
    }
    if let Some(v) = args.a1 {
        cfg.run.a1 = Some(v);
    }
    if let Some(v) = args.a2 {
        cfg.run.a2 = Some(v);
    }
    if let Some(v) = args.m {
        cfg.run.m = Some(v);
    }
    if let Some(v) = args.kappa {
        cfg.run.kappa = Some(v);
    }
    if let Some(v) = args.c_nm {
        cfg.run.c_nm = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

//! Benchmark suites reproducing the experimental capture tables: each
//! suite fits approximants at a ladder of degrees, enumerates their
//! critical points, and reports per-degree capture statistics against
//! the checked-in reference sets.

use std::path::PathBuf;
use std::str::FromStr;

use chebmin::bruteforce::{dedupe_points, euclid, poly_critical_points, RefOptions};
use chebmin::dlsp::{self, FitMethod};
use chebmin::driver::{
    minimizers_regular, minimizers_split, polish, RunOptions, SamplingMode,
};
use chebmin::oracle::{
    make_benchmark, random_tensor_poly, with_noise, Benchmark, BoxDomain, NoiseModel, Oracle,
};
use chebmin::planner::Plan;
use chebmin::psolve::{CriticalPoint, Kind, SolveOptions};
use chebmin::sampling::tensor_grid;

use crate::{write_atomic, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Polyrecover,
    Deuflhard2d,
    Dejong,
    Holder,
    Deuflhard4d,
    Trefethen,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polyrecover" => Ok(Suite::Polyrecover),
            "deuflhard2d" => Ok(Suite::Deuflhard2d),
            "dejong" => Ok(Suite::Dejong),
            "holder" => Ok(Suite::Holder),
            "deuflhard4d" => Ok(Suite::Deuflhard4d),
            "trefethen" => Ok(Suite::Trefethen),
            other => Err(CliError::Other(format!("unknown suite: {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Directory holding the reference CSVs.
    pub data_dir: PathBuf,
    /// Degree ladder override.
    pub degrees: Option<Vec<u32>>,
    /// Nodes per axis for the 2-D fitting grids.
    pub grid_2d: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            data_dir: default_data_dir(),
            degrees: None,
            grid_2d: 120,
        }
    }
}

pub fn default_data_dir() -> PathBuf {
    if let Ok(d) = std::env::var("CHEBMIN_DATA") {
        return PathBuf::from(d);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// One line of a capture table.
#[derive(Debug, Clone)]
pub struct CaptureRow {
    pub degree: u32,
    pub captured: usize,
    pub total: usize,
    /// Max over captured references of the distance to the nearest found
    /// point.
    pub max_err: f64,
    pub mean_err: f64,
    /// Per-reference nearest distances (diagnostics; not serialized).
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    /// (file name, content) pairs for the emitted CSVs.
    pub files: Vec<(String, String)>,
    /// Primary capture table (minima).
    pub rows: Vec<CaptureRow>,
    /// Saddle capture table (composite suite only).
    pub saddle_rows: Vec<CaptureRow>,
    /// Per-degree max distance of polished minimizers to reference.
    pub polished_max: Vec<(u32, f64)>,
    /// Largest finite-difference gradient residual at polished points,
    /// in original coordinates (2-D suites with polish).
    pub polish_residual_max: Vec<(u32, f64)>,
    /// Trefethen: (degree, discrete L2 error norm, in-bounds count).
    pub trefethen: Vec<(u32, f64, usize)>,
}

fn capture_row(degree: u32, found: &[Vec<f64>], reference: &[Vec<f64>], tau: f64) -> CaptureRow {
    let distances: Vec<f64> = reference
        .iter()
        .map(|r| {
            found
                .iter()
                .map(|f| euclid(r, f))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let captured: Vec<f64> = distances.iter().copied().filter(|&d| d <= tau).collect();
    CaptureRow {
        degree,
        captured: captured.len(),
        total: reference.len(),
        max_err: captured.iter().copied().fold(0.0, f64::max),
        mean_err: if captured.is_empty() {
            f64::NAN
        } else {
            captured.iter().sum::<f64>() / captured.len() as f64
        },
        distances,
    }
}

fn capture_csv(rows: &[CaptureRow]) -> String {
    let mut s = String::from("degree,captured,max_err,mean_err\n");
    for r in rows {
        s.push_str(&format!(
            "{},{}/{},{:.3e},{:.3e}\n",
            r.degree, r.captured, r.total, r.max_err, r.mean_err
        ));
    }
    s
}

fn load_reference(opts: &BenchOptions, file: &str) -> Result<Vec<Vec<f64>>, CliError> {
    crate::refs::load_points(&opts.data_dir.join(file))
}

/// Fits the benchmark at one degree on a tensor grid and enumerates the
/// approximant's critical points.
fn fit_and_solve(
    o: &Oracle,
    n: usize,
    d: u32,
    grid_side: usize,
    eps: f64,
    method: FitMethod,
) -> Result<(Vec<CriticalPoint>, chebmin::dlsp::FitReport), CliError> {
    let plan = Plan::forced(n, eps, d, 0.0, (grid_side as u128).pow(n as u32));
    let run = minimizers_regular(
        o,
        &plan,
        SamplingMode::Grid,
        &RunOptions {
            method,
            solve: SolveOptions::default(),
            polish: false,
            polish_iters: 300,
        },
    )?;
    Ok((run.all_critical, run.fit))
}

/// Quasi-Newton refinements started from every critical point, deduped.
fn refined_points(o: &Oracle, points: &[CriticalPoint], dom: &BoxDomain) -> Vec<Vec<f64>> {
    let mut refined: Vec<Vec<f64>> = points.iter().map(|p| polish(o, &p.location, 300)).collect();
    refined.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dedupe_points(refined, 1e-6)
        .into_iter()
        .map(|m| dom.from_unit(&m))
        .collect()
}

fn to_original(dom: &BoxDomain, pts: impl IntoIterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    pts.into_iter().map(|p| dom.from_unit(&p)).collect()
}

fn kind_locations(points: &[CriticalPoint], kind: Kind) -> Vec<Vec<f64>> {
    points
        .iter()
        .filter(|p| p.kind == kind)
        .map(|p| p.location.clone())
        .collect()
}

/// Sup-norm finite-difference gradient of the oracle at a point in
/// original coordinates.
fn fd_residual_original(o: &Oracle, dom: &BoxDomain, x_unit: &[f64]) -> f64 {
    let hw = dom.half_widths();
    let h = 1e-6;
    (0..x_unit.len())
        .map(|a| {
            let mut xp = x_unit.to_vec();
            let mut xm = x_unit.to_vec();
            xp[a] += h;
            xm[a] -= h;
            ((o.evaluate_exact(&xp) - o.evaluate_exact(&xm)) / (2.0 * h) / hw[a]).abs()
        })
        .fold(0.0, f64::max)
}

pub fn run_suite(suite: Suite, opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    match suite {
        Suite::Deuflhard2d => bench_deuflhard2d(opts),
        Suite::Dejong => bench_dejong(opts),
        Suite::Holder => bench_holder(opts),
        Suite::Deuflhard4d => bench_deuflhard4d(opts),
        Suite::Trefethen => bench_trefethen(opts),
        Suite::Polyrecover => bench_polyrecover(opts),
    }
}

/// Six minimizers on [-1.1,1.1]^2, captured to 1e-3 by the approximant's
/// own minimizer-kind points from degree 18 on.
fn bench_deuflhard2d(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let bench = Benchmark::Deuflhard2d;
    let dom = bench.default_domain();
    let o = make_benchmark(bench, &dom)?;
    let reference = load_reference(opts, "deuflhard2d_minima.csv")?;
    let degrees = opts.degrees.clone().unwrap_or_else(|| vec![8, 18, 22]);
    let mut report = SuiteReport::default();
    for &d in &degrees {
        let (points, _fit) = fit_and_solve(&o, 2, d, opts.grid_2d, 1e-2, FitMethod::Orthogonal)?;
        let mins = to_original(&dom, kind_locations(&points, Kind::Minimizer));
        report.rows.push(capture_row(d, &mins, &reference, 1e-3));
        // polish each found minimizer and record the worst gradient residual
        let polished: Vec<Vec<f64>> = points
            .iter()
            .filter(|p| p.kind == Kind::Minimizer)
            .map(|p| polish(&o, &p.location, 300))
            .collect();
        let worst = polished
            .iter()
            .map(|x| fd_residual_original(&o, &dom, x))
            .fold(0.0, f64::max);
        report.polish_residual_max.push((d, worst));
        let pol_orig = to_original(&dom, polished);
        let pol_max = reference
            .iter()
            .map(|r| {
                pol_orig
                    .iter()
                    .map(|f| euclid(r, f))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        report.polished_max.push((d, pol_max));
    }
    report
        .files
        .push(("deuflhard2d.csv".into(), capture_csv(&report.rows)));
    Ok(report)
}

/// Capture of the 25 wells; the capture set is the quasi-Newton
/// refinement of every critical point (the descent-refined workflow).
fn bench_dejong(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let bench = Benchmark::DeJong5;
    let dom = bench.default_domain();
    let o = make_benchmark(bench, &dom)?;
    let reference = load_reference(opts, "dejong5_minima.csv")?;
    let degrees = opts.degrees.clone().unwrap_or_else(|| vec![12, 20]);
    let mut report = SuiteReport::default();
    for &d in &degrees {
        let (points, _fit) = fit_and_solve(&o, 2, d, opts.grid_2d, 1e-2, FitMethod::Orthogonal)?;
        let refined = refined_points(&o, &points, &dom);
        report.rows.push(capture_row(d, &refined, &reference, 0.5));
    }
    report
        .files
        .push(("dejong.csv".into(), capture_csv(&report.rows)));
    Ok(report)
}

fn bench_holder(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let bench = Benchmark::HolderTable2;
    let dom = bench.default_domain();
    let o = make_benchmark(bench, &dom)?;
    let reference = load_reference(opts, "holder_table2_minima.csv")?;
    let degrees = opts.degrees.clone().unwrap_or_else(|| vec![19]);
    let mut report = SuiteReport::default();
    for &d in &degrees {
        let (points, _fit) = fit_and_solve(&o, 2, d, opts.grid_2d, 1e-2, FitMethod::Orthogonal)?;
        let refined = refined_points(&o, &points, &dom);
        report.rows.push(capture_row(d, &refined, &reference, 0.2));
    }
    report
        .files
        .push(("holder.csv".into(), capture_csv(&report.rows)));
    Ok(report)
}

/// The 4-D composite over the stretched orthant, split into 16
/// subdomains per degree. Capture is kind-matched: reference minima
/// against Minimizer-kind points, reference saddles against Saddle-kind
/// points, both at threshold 0.1 in original coordinates.
fn bench_deuflhard4d(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let dom = BoxDomain::new(
        vec![-0.1, -1.1, -0.1, -1.1],
        vec![1.1, 0.1, 1.1, 0.1],
    )
    .expect("orthant box");
    let o = make_benchmark(Benchmark::Deuflhard4d, &dom)?;
    let ref_min = load_reference(opts, "deuflhard4d_orthant_minima.csv")?;
    let ref_sad = load_reference(opts, "deuflhard4d_orthant_saddles.csv")?;
    let degrees = opts.degrees.clone().unwrap_or_else(|| (3..=8).collect());
    let tau = 0.1;
    let mut report = SuiteReport::default();
    for &d in &degrees {
        let side = 2 * (d as u64 + 1);
        let plan = Plan::forced(4, 0.1, d, 0.0, side.pow(4) as u128);
        let run = minimizers_split(
            &o,
            &plan,
            2,
            SamplingMode::Grid,
            &RunOptions {
                method: FitMethod::NormalEq,
                solve: SolveOptions::default(),
                polish: false,
                polish_iters: 300,
            },
        )?;
        let mins = to_original(&dom, kind_locations(&run.merged_critical, Kind::Minimizer));
        let sads = to_original(&dom, kind_locations(&run.merged_critical, Kind::Saddle));
        report.rows.push(capture_row(d, &mins, &ref_min, tau));
        report.saddle_rows.push(capture_row(d, &sads, &ref_sad, tau));
        let refined = refined_points(&o, &run.merged_critical, &dom);
        let pol_max = ref_min
            .iter()
            .map(|r| {
                refined
                    .iter()
                    .map(|f| euclid(r, f))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        report.polished_max.push((d, pol_max));
    }
    report
        .files
        .push(("deuflhard4d.csv".into(), capture_csv(&report.rows)));
    report.files.push((
        "deuflhard4d_saddles.csv".into(),
        capture_csv(&report.saddle_rows),
    ));
    Ok(report)
}

/// The oscillatory benchmark on the reduced domain: reports the discrete
/// L2 error norm of the fit and the number of in-bounds critical points.
fn bench_trefethen(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let bench = Benchmark::Trefethen;
    let dom = bench.default_domain();
    let o = make_benchmark(bench, &dom)?;
    let degrees = opts.degrees.clone().unwrap_or_else(|| vec![34]);
    let mut report = SuiteReport::default();
    let mut csv = String::from("degree,err_l2,critical_points\n");
    for &d in &degrees {
        let (points, fit) = fit_and_solve(&o, 2, d, opts.grid_2d, 1e-2, FitMethod::Orthogonal)?;
        let grid = tensor_grid(2, opts.grid_2d);
        let err = dlsp::discrete_l2_error(&fit.poly, &o, &grid)?.sqrt();
        report.trefethen.push((d, err, points.len()));
        csv.push_str(&format!("{d},{err:.4e},{}\n", points.len()));
    }
    report.files.push(("trefethen.csv".into(), csv));
    Ok(report)
}

/// Recovery of random dense polynomial objectives at their own degree:
/// every interior reference critical point must be matched by the
/// solver, exactly in the exact model and to 1e-2 under bounded noise.
fn bench_polyrecover(opts: &BenchOptions) -> Result<SuiteReport, CliError> {
    let degrees = opts.degrees.clone().unwrap_or_else(|| vec![4, 6, 8]);
    let seeds: [u64; 4] = [1, 2, 3, 4];
    let mut report = SuiteReport::default();
    let mut csv = String::from("n,degree,seed,noisy,captured,max_err,mean_err\n");
    for n in [2usize, 3] {
        for &d in &degrees {
            for &seed in &seeds {
                let p = random_tensor_poly(n, d, 1000 * n as u64 + 10 * d as u64 + seed);
                let reference = poly_critical_points(
                    &p,
                    &RefOptions {
                        starts_per_axis: if n == 2 { 81 } else { 41 },
                        ..RefOptions::default()
                    },
                );
                let o = Oracle::from_poly(&p);
                let grid_side = if n == 2 { opts.grid_2d } else { 48 };
                for noisy in [false, true] {
                    let (oracle, eta, tau) = if noisy {
                        (
                            with_noise(&o, NoiseModel::UniformBounded { seed: seed ^ 0x5A }),
                            0.1,
                            1e-2,
                        )
                    } else {
                        (o.clone(), 0.0, 1e-8)
                    };
                    let plan = Plan::forced(n, 2e-9, d, eta, (grid_side as u128).pow(n as u32));
                    let run = minimizers_regular(
                        &oracle,
                        &plan,
                        SamplingMode::Grid,
                        &RunOptions {
                            method: FitMethod::NormalEq,
                            solve: SolveOptions::default(),
                            polish: false,
                            polish_iters: 300,
                        },
                    )?;
                    let found: Vec<Vec<f64>> = run
                        .all_critical
                        .iter()
                        .map(|q| q.location.clone())
                        .collect();
                    let mut row = capture_row(d, &found, &reference, tau);
                    row.degree = d;
                    csv.push_str(&format!(
                        "{n},{d},{seed},{noisy},{}/{},{:.3e},{:.3e}\n",
                        row.captured, row.total, row.max_err, row.mean_err
                    ));
                    report.rows.push(row);
                }
            }
        }
    }
    report.files.push(("polyrecover.csv".into(), csv));
    Ok(report)
}

pub fn write_suite_files(out_dir: &str, report: &SuiteReport) -> Result<(), CliError> {
    for (name, content) in &report.files {
        write_atomic(&PathBuf::from(out_dir).join(name), content)?;
    }
    Ok(())
}
